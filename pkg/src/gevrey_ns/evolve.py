"""Mild-solution time marching with a priori monitors.

The stepper is an exponential predictor-corrector built on the same
exponential-trapezoidal weights as the Duhamel quadrature:

    u~      = E (u_n - dt B(u_n, u_n))
    u_{n+1} = E u_n - w_left B(u_n, u_n) - w_right B(u~, u~),     E = e^{nu dt Δ}

Monitors only record verdicts; they never stop a run.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .fixedpoint import Trajectory
from .lattice import (
    SpectralVectorField,
    build_lattice,
    random_divfree_field,
    read_snapshot,
    single_mode,
    taylor_green,
)
from .nonlinear import bilinear_arrays, hermitian_arrays, leray_arrays
from .norms import GevreyParams, weight_array, z_norm
from .semigroup import trapezoid_cumulative, trapezoid_weights

log = logging.getLogger(__name__)

INIT_KINDS = ("taylor-green", "random-divfree", "single-mode", "snapshot")
DECAY_RATE_SLACK = 0.95


@dataclass
class SimConfig:
    M: int = 8
    nu: float = 1.0
    a: float = 1.0
    sigma: float = 2.0
    dt: float = 1e-3
    t_end: float = 1.0
    init: str = "random-divfree"
    # target ||u0||_{Z^-1_{a,sigma}}; None keeps a snapshot's own scale
    amplitude: Optional[float] = 0.5
    decay_rate: float = 1.0
    seed: int = 0
    snapshot: str = ""
    linearized: bool = False
    n_max: int = 4
    gronwall_c: float = 1.0
    monitor_thm6: bool = True
    monitor_gronwall: bool = True
    monitor_decay: bool = True

    def __post_init__(self):
        build_lattice(self.M)
        GevreyParams(-1, self.a, self.sigma)
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be at least dt")
        if self.amplitude is not None and not self.amplitude >= 0:
            raise ValueError("amplitude must be nonnegative")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        if self.init == "snapshot" and not self.snapshot:
            raise ValueError("init = snapshot needs a snapshot path")
        if self.amplitude is None and self.init != "snapshot":
            raise ValueError("amplitude is required unless init = snapshot")
        if not self.decay_rate > 0:
            raise ValueError("decay_rate must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not self.gronwall_c >= 0:
            raise ValueError("gronwall_c must be nonnegative")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def gevrey(self) -> GevreyParams:
        return GevreyParams(-1, self.a, self.sigma)

    @classmethod
    def field_types(cls) -> dict:
        return {f.name: f.type for f in fields(cls)}


def initial_field(cfg: SimConfig) -> SpectralVectorField:
    lat = build_lattice(cfg.M)
    if cfg.init == "taylor-green":
        u0 = taylor_green(lat)
    elif cfg.init == "single-mode":
        u0 = single_mode(lat)
    elif cfg.init == "random-divfree":
        u0 = random_divfree_field(lat, cfg.decay_rate, 1.0, cfg.seed)
    else:
        u0 = read_snapshot(cfg.snapshot)
        if u0.lattice != lat:
            raise ValueError(f"snapshot lattice M={u0.lattice.M} does not match config M={cfg.M}")
    if cfg.amplitude is None:
        return u0
    z = z_norm(u0, cfg.gevrey)
    if z == 0.0 or cfg.amplitude == 0.0:
        return SpectralVectorField.zeros(lat)
    return u0 * (cfg.amplitude / z)


def _nonlinear(c: np.ndarray, lattice) -> np.ndarray:
    return bilinear_arrays(c, c, lattice)


def step(u: SpectralVectorField, dt: float, nu: float, linearized: bool = False) -> SpectralVectorField:
    lat = u.lattice
    decay, wl, wr = trapezoid_weights(lat, dt, nu)
    if linearized:
        return SpectralVectorField(lat, decay * u.coeffs)
    b0 = _nonlinear(u.coeffs, lat)
    pred = decay * (u.coeffs - dt * b0)
    b1 = _nonlinear(pred, lat)
    new = decay * u.coeffs - wl * b0 - wr * b1
    return SpectralVectorField(lat, hermitian_arrays(leray_arrays(new, lat), lat))


def march(u0: SpectralVectorField, dt: float, n_steps: int, nu: float,
          linearized: bool = False) -> Trajectory:
    """Stepper output at every node, as a Trajectory."""
    out = np.empty((n_steps + 1, 3) + u0.lattice.shape, dtype=complex)
    out[0] = u0.coeffs
    u = u0
    for j in range(n_steps):
        u = step(u, dt, nu, linearized)
        out[j + 1] = u.coeffs
    return Trajectory(u0.lattice, dt * np.arange(n_steps + 1), out)


# -- time series -----------------------------------------------------------

@dataclass
class TimeSeries:
    nu: float
    a: float
    sigma: float
    dt: float
    n_max: int
    t: np.ndarray
    z_m1: np.ndarray
    z_0: np.ndarray
    z_p1: np.ndarray
    x_m1: np.ndarray
    x_0: np.ndarray
    x_1: np.ndarray
    z_m1_scale: np.ndarray          # (nodes, n_max + 1), a / sigma^{n/2}
    dissipation: np.ndarray         # int_0^t ||Δu||_{Z^-1} = int_0^t ||u||_{Z^1}
    div_residual: np.ndarray
    aborted: bool = False
    thm6_lhs: Optional[np.ndarray] = None
    thm6_ok: Optional[np.ndarray] = None
    gronwall_rhs: Optional[np.ndarray] = None
    decay_bound_ok: Optional[np.ndarray] = None
    reports: dict = field(default_factory=dict)

    @property
    def z0(self) -> float:
        return float(self.z_m1[0])

    @property
    def z_m1_half(self) -> np.ndarray:
        """Z^-1 norm at a / sqrt(sigma)."""
        return self.z_m1_scale[:, 1]

    @property
    def blowup_indicator(self) -> np.ndarray:
        """Running int_0^t ||u||_{X^0}^2."""
        return trapezoid_cumulative(self.x_0**2, self.dt)

    def columns(self) -> list[str]:
        return (["t", "z_m1", "z_0", "z_p1", "x_m1", "x_0", "x_1"]
                + [f"z_m1_scale_{n}" for n in range(self.n_max + 1)]
                + ["dissipation", "thm6_lhs", "thm6_ok", "gronwall_rhs", "decay_bound_ok"])

    def rows(self):
        nodes = len(self.t)
        nan = np.full(nodes, np.nan)
        thm6_lhs = self.thm6_lhs if self.thm6_lhs is not None else nan
        gron = self.gronwall_rhs if self.gronwall_rhs is not None else nan
        for j in range(nodes):
            yield ([self.t[j], self.z_m1[j], self.z_0[j], self.z_p1[j],
                    self.x_m1[j], self.x_0[j], self.x_1[j]]
                   + list(self.z_m1_scale[j])
                   + [self.dissipation[j], thm6_lhs[j], _flag(self.thm6_ok, j),
                      gron[j], _flag(self.decay_bound_ok, j)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(self.columns())
            for row in self.rows():
                wr.writerow([_fmt(x) for x in row])


def _flag(arr, j):
    if arr is None:
        return ""
    return 1 if arr[j] else 0


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) or isinstance(x, str):
        return str(x)
    return repr(float(x))


def _record(mags: np.ndarray, lat, cfg: SimConfig, weights: dict) -> list[float]:
    m = mags[lat.mask]
    return [math.fsum((w * m).tolist()) for w in weights.values()]


def simulate(cfg: SimConfig, u0: Optional[SpectralVectorField] = None) -> TimeSeries:
    lat = build_lattice(cfg.M)
    if u0 is None:
        u0 = initial_field(cfg)
    p = cfg.gevrey
    keys = ["z_m1", "z_0", "z_p1", "x_m1", "x_0", "x_1"]
    params = [p, p.with_rho(0), p.with_rho(1),
              GevreyParams(-1, 0.0, p.sigma), GevreyParams(0, 0.0, p.sigma), GevreyParams(1, 0.0, p.sigma)]
    params += [p.with_a(p.a / p.sigma ** (n / 2)) for n in range(cfg.n_max + 1)]
    weights = {i: weight_array(lat, q)[lat.mask] for i, q in enumerate(params)}

    n = cfg.n_steps
    rec = np.zeros((n + 1, len(params)))
    divres = np.zeros(n + 1)
    u = u0
    last = 0
    aborted = False
    for j in range(n + 1):
        if j > 0:
            u = step(u, cfg.dt, cfg.nu, cfg.linearized)
        mags = u.magnitude()
        rec[j] = _record(mags, lat, cfg, weights)
        kdotu = np.abs(np.einsum("iabc,iabc->abc", lat.kvec, u.coeffs))
        divres[j] = float(kdotu.max())
        last = j
        if not np.all(np.isfinite(rec[j])):
            aborted = True
            log.error("non-finite norm at t=%g; aborting run", j * cfg.dt)
            break
        if j and j % 1000 == 0:
            log.debug("t=%.4g z=%.6g", j * cfg.dt, rec[j, 0])
    rec = rec[: last + 1]
    t = cfg.dt * np.arange(last + 1)
    series = TimeSeries(
        nu=cfg.nu, a=cfg.a, sigma=cfg.sigma, dt=cfg.dt, n_max=cfg.n_max, t=t,
        z_m1=rec[:, 0], z_0=rec[:, 1], z_p1=rec[:, 2], x_m1=rec[:, 3], x_0=rec[:, 4], x_1=rec[:, 5],
        z_m1_scale=rec[:, 6:], dissipation=trapezoid_cumulative(rec[:, 2], cfg.dt),
        div_residual=divres[: last + 1], aborted=aborted,
    )
    apply_monitors(series, cfg)
    return series


def apply_monitors(series: TimeSeries, cfg: SimConfig) -> None:
    if cfg.monitor_thm6:
        rep = theorem6_monitor(series, cfg.nu)
        series.thm6_lhs, series.thm6_ok = rep.pop("lhs"), rep.pop("node_ok")
        series.reports["theorem6"] = rep
    if cfg.monitor_gronwall:
        rep = gronwall_monitor(series, cfg.gronwall_c)
        series.gronwall_rhs = rep.pop("rhs")
        rep.pop("node_ok")
        series.reports["gronwall"] = rep
    if cfg.monitor_decay:
        rep = decay_metric(series)
        series.decay_bound_ok = rep.pop("node_ok")
        series.reports["decay"] = rep
    series.reports["structure"] = structure_report(series)
    series.reports["blowup"] = {
        "aborted": series.aborted,
        "x0_squared_integral": float(series.blowup_indicator[-1]),
    }


# -- monitors --------------------------------------------------------------

def theorem6_monitor(series: TimeSeries, nu: float) -> dict:
    """z(t) + ((nu - z0)/2) D(t) <= z0 (1 + tol) at every node."""
    z, z0, D = series.z_m1, series.z0, series.dissipation
    lhs = z + 0.5 * (nu - z0) * D
    if len(z) >= 3:
        curvature = float(np.max(np.abs(np.diff(series.z_p1, 2)))) / series.dt**2
    else:
        curvature = 0.0
    tol = 1e-6 + 2.0 * series.dt**2 * curvature
    node_ok = lhs <= z0 * (1.0 + tol)
    worst = float(np.max(lhs - z0)) / z0 if z0 > 0 else 0.0
    return {
        "ok": bool(np.all(node_ok)),
        "precondition_ok": bool(z0 < nu),
        "tol": tol,
        "worst_relative_excess": worst,
        "failing_nodes": int(np.count_nonzero(~node_ok)),
        "lhs": lhs,
        "node_ok": node_ok,
    }


def gronwall_monitor(series: TimeSeries, c: float) -> dict:
    """z(t) <= z0 exp(c int_0^t ||u||^2_{Z^-1_{a/sqrt(sigma)}}); also the smallest admissible c."""
    z, z0 = series.z_m1, series.z0
    integral = trapezoid_cumulative(series.z_m1_half**2, series.dt)
    rhs = z0 * np.exp(c * integral)
    node_ok = z <= rhs * (1.0 + 1e-12)
    # the bound is monotone in c, so the smallest admissible c has a closed form
    c_star = 0.0
    for zj, Ij in zip(z, integral):
        if zj <= z0:
            continue
        if Ij <= 0.0:
            c_star = math.inf
            break
        c_star = max(c_star, math.log(zj / z0) / Ij)
    return {"ok": bool(np.all(node_ok)), "c": c, "c_star": c_star, "rhs": rhs, "node_ok": node_ok}


def decay_metric(series: TimeSeries) -> dict:
    """Half-life, terminal ratio, late-time exponential rate, and the bound z0 e^{-0.95 (nu - z0) t}."""
    z, t, z0, nu = series.z_m1, series.t, series.z0, series.nu
    if z0 == 0.0:
        return {"t_half": 0.0, "terminal_ratio": 0.0, "fitted_rate": 0.0,
                "bound_applicable": True, "ok": True, "node_ok": np.ones(len(z), dtype=bool)}
    below = np.nonzero(z <= 0.5 * z0)[0]
    t_half = float(t[below[0]]) if len(below) else None
    q = max(len(z) * 3 // 4, 0)
    tail_t, tail_z = t[q:], z[q:]
    if len(tail_t) >= 2 and np.all(tail_z > 0):
        slope = np.polyfit(tail_t, np.log(tail_z), 1)[0]
        rate = float(-slope)
    else:
        rate = math.nan
    applicable = z0 < nu
    if applicable:
        bound = z0 * np.exp(-DECAY_RATE_SLACK * (nu - z0) * t)
        node_ok = z <= bound * (1.0 + 1e-12)
    else:
        node_ok = np.zeros(len(z), dtype=bool)
    return {
        "t_half": t_half,
        "terminal_ratio": float(z[-1] / z0),
        "fitted_rate": rate,
        "bound_applicable": bool(applicable),
        "ok": bool(applicable and np.all(node_ok)),
        "node_ok": node_ok,
    }


def structure_report(series: TimeSeries) -> dict:
    z, z0, nu = series.z_m1, series.z0, series.nu
    steps = np.diff(z)
    below = z[:-1] < nu
    scale = series.z_m1_scale
    chain_ok = bool(np.all(np.diff(scale, axis=1) <= 0) and np.all(scale[:, -1] >= series.x_m1))
    return {
        "max_div_residual": float(np.max(series.div_residual)),
        "div_ok": bool(np.all(series.div_residual <= 1e-10 * max(z0, 1e-300)) or z0 == 0.0),
        "nonincreasing_ok": bool(np.all(steps[below] <= 1e-8)),
        "scale_chain_ok": chain_ok,
    }


def run_summary(cfg: SimConfig, series: TimeSeries) -> dict:
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (np.floating, float)):
            return None if not math.isfinite(v) else float(v)
        if isinstance(v, np.bool_):
            return bool(v)
        return v

    verdicts = {name: rep.get("ok") for name, rep in series.reports.items() if "ok" in rep}
    return clean({
        "config": asdict(cfg),
        "seed": cfg.seed,
        "nodes": len(series.t),
        "z0": series.z0,
        "z_final": float(series.z_m1[-1]),
        "monitors": series.reports,
        "verdicts": verdicts,
        "all_ok": all(v for v in verdicts.values()) and not series.aborted,
        "fitted_decay_rate": series.reports.get("decay", {}).get("fitted_rate"),
    })


def write_outputs(cfg: SimConfig, series: TimeSeries, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series.to_csv(out / "series.csv")
    summary = run_summary(cfg, series)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
