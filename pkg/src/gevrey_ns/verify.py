"""Margin reports for the product, Duhamel and interpolation inequalities.

Every check reports the worst ratio lhs / rhs over its samples together with
the sample that attains it; samples with a zero right-hand side are skipped
and counted.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .evolve import march
from .fixedpoint import PicardParams, Trajectory, choose_parameters, picard_solve
from .lattice import FrequencyLattice, SpectralVectorField, random_divfree_field, random_scalar_field
from .nonlinear import bilinear_arrays, convolve_direct, convolve_fast, tensor_product
from .norms import GevreyParams, lemma4_constant, z_norm, z_norm_batch
from .semigroup import duhamel_cumulative_arrays, trapezoid_integral

LEMMA1_SLACK = 1e-10
LEMMA4_SLACK = 1e-10
DUHAMEL_SLACK = 0.05


@dataclass
class MarginReport:
    inequality: str
    samples: int = 0
    skipped: int = 0
    worst_ratio: float = 0.0
    worst_sample: Optional[dict] = None
    failing: list = field(default_factory=list)
    slack: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1.0 + self.slack

    def add(self, ratio: float, sample: dict) -> None:
        self.samples += 1
        if ratio > self.worst_ratio or self.worst_sample is None:
            self.worst_ratio = max(self.worst_ratio, ratio)
            self.worst_sample = dict(sample, ratio=ratio)
        if ratio > 1.0 + self.slack:
            self.failing.append(dict(sample, ratio=ratio))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _sample_seeds(seed: int, samples: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(samples)]


def check_lemma1(samples: int, lattice: FrequencyLattice, seed: int, a: float = 1.0,
                 sigma: float = 2.0, method: str = "fast") -> MarginReport:
    """||fg||_{Z^0} <= ||f||_{Z^-1} ||g||_{Z^1} + ||f||_{Z^1} ||g||_{Z^-1} on random scalar pairs."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    conv = {"fast": convolve_fast, "direct": convolve_direct}[method]
    p = GevreyParams(-1, a, sigma)
    rep = MarginReport("lemma1", slack=LEMMA1_SLACK, details={"a": a, "sigma": sigma, "M": lattice.M})
    for i, s in enumerate(_sample_seeds(seed, samples)):
        rng = np.random.default_rng(s)
        df, dg = rng.uniform(0.1, 2.0, size=2)
        f = random_scalar_field(lattice, df, 1.0, rng)
        g = random_scalar_field(lattice, dg, 1.0, rng)
        rhs = (z_norm(f, p) * z_norm(g, p.with_rho(1)) + z_norm(f, p.with_rho(1)) * z_norm(g, p))
        if rhs == 0.0:
            rep.skipped += 1
            continue
        lhs = z_norm(conv(f, g), p.with_rho(0))
        rep.add(lhs / rhs, {"index": i, "seed": s})
    return rep


def lemma4_chain_constant(a: float, sigma: float) -> float:
    """Constant of the full chain: 2 from the weight split, times sup x^2 e^{-b x^{1/sigma}}."""
    return 2.0 * lemma4_constant(a, sigma)


def check_lemma4(samples: int, lattice: FrequencyLattice, a: float, sigma: float, seed: int) -> MarginReport:
    """||u⊗u||_{Z^0_a} <= c ||u||_{Z^-1_{a/sqrt(s)}} ||u||^{1/2}_{Z^-1_a} ||Δu||^{1/2}_{Z^-1_a}.

    Besides the end-to-end ratio, the worst ratio of each link in the chain is
    recorded under ``details['steps']``:

      split:   ||u⊗u||_{Z^0_a} <= 2 ||u||_{Z^0_{a/s}} ||u||_{Z^0_a}
      lattice: ||u||_{Z^0_{a/s}} <= ||u||_{Z^1_{a/s}}            (|k| >= 1)
      weight:  ||u||_{Z^1_{a/s}} <= c_{a,s} ||u||_{Z^-1_{a/sqrt(s)}}
      interp:  ||u||_{Z^0_a} <= (||u||_{Z^-1_a} ||u||_{Z^1_a})^{1/2}
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    c_ab = lemma4_constant(a, sigma)
    c_chain = 2.0 * c_ab
    p = GevreyParams(-1, a, sigma)
    p_s = p.with_a(a / sigma)
    p_half = p.with_a(a / math.sqrt(sigma))
    rep = MarginReport("lemma4", slack=LEMMA4_SLACK,
                       details={"a": a, "sigma": sigma, "M": lattice.M, "c_ab": c_ab, "c_chain": c_chain})
    steps = {"split": 0.0, "lattice": 0.0, "weight": 0.0, "interp": 0.0}
    for i, s in enumerate(_sample_seeds(seed, samples)):
        rng = np.random.default_rng(s)
        u = random_divfree_field(lattice, rng.uniform(0.1, 2.0), 1.0, int(rng.integers(2**32)))
        zm1_half = z_norm(u, p_half)
        zm1, zp1 = z_norm(u, p), z_norm(u, p.with_rho(1))
        rhs = c_chain * zm1_half * math.sqrt(zm1 * zp1)
        if rhs == 0.0:
            rep.skipped += 1
            continue
        lhs = z_norm(tensor_product(u, u), p.with_rho(0))
        z0_s, z0_a = z_norm(u, p_s.with_rho(0)), z_norm(u, p.with_rho(0))
        z1_s = z_norm(u, p_s.with_rho(1))
        steps["split"] = max(steps["split"], lhs / (2 * z0_s * z0_a))
        steps["lattice"] = max(steps["lattice"], z0_s / z1_s)
        steps["weight"] = max(steps["weight"], z1_s / (c_ab * zm1_half))
        steps["interp"] = max(steps["interp"], z0_a / math.sqrt(zm1 * zp1))
        rep.add(lhs / rhs, {"index": i, "seed": s})
    rep.details["steps"] = steps
    return rep


def check_lemma23(traj: Trajectory, nu: float, p: GevreyParams = GevreyParams()):
    """Discrete Duhamel bounds on a trajectory; returns (lemma2_report, lemma3_report).

    lemma 2: sup_j ||Duh_j||_{Z^-1}            <= 2 ||u||_{L^inf(Z^-1)} ||u||_{L^1(Z^1)}
    lemma 3: int ||Duh(t)||_{Z^1} dt           <= (2 / nu) ||u||_{L^inf(Z^-1)} ||u||_{L^1(Z^1)}

    Duh is the exponential-trapezoidal Duhamel integral of div(u⊗u), without
    the Leray projection.
    """
    lat, dt = traj.lattice, traj.dt
    pm1, pp1 = p.with_rho(-1), p.with_rho(1)
    F = bilinear_arrays(traj.coeffs, traj.coeffs, lat, project=False)
    duh = Trajectory(lat, traj.times, duhamel_cumulative_arrays(F, lat, dt, nu))
    product = 2.0 * traj.linf(p) * traj.l1(p)
    lhs2 = float(np.max(duh.norms(pm1)))
    lhs3 = trapezoid_integral(duh.norms(pp1), dt)
    reports = []
    for name, lhs, rhs in (("lemma2", lhs2, product), ("lemma3", lhs3, product / nu)):
        rep = MarginReport(name, slack=DUHAMEL_SLACK, details={"lhs": lhs, "rhs": rhs})
        if rhs == 0.0:
            rep.skipped += 1
        else:
            rep.add(lhs / rhs, {"nodes": len(traj)})
        reports.append(rep)
    return tuple(reports)


def check_lemma23_random(samples: int, lattice: FrequencyLattice, seed: int, a: float = 1.0,
                         sigma: float = 2.0, nu: float = 1.0, dt: float = 0.01, steps: int = 20):
    """Lemma 2/3 margins over short marched trajectories from random small data."""
    p = GevreyParams(-1, a, sigma)
    agg = [MarginReport("lemma2", slack=DUHAMEL_SLACK), MarginReport("lemma3", slack=DUHAMEL_SLACK)]
    for i, s in enumerate(_sample_seeds(seed, samples)):
        rng = np.random.default_rng(s)
        u0 = random_divfree_field(lattice, rng.uniform(0.3, 2.0), 1.0, int(rng.integers(2**32)))
        z = z_norm(u0, p)
        if z == 0.0:
            for r in agg:
                r.skipped += 1
            continue
        u0 = u0 * (rng.uniform(0.01, 0.5) * nu / z)
        traj = march(u0, dt, steps, nu)
        for r, sub in zip(agg, check_lemma23(traj, nu, p)):
            if sub.samples == 0:
                r.skipped += 1
            else:
                r.add(sub.worst_ratio, {"index": i, "seed": s})
    return tuple(agg)


def cross_validate(u0: SpectralVectorField, nu: float, p: GevreyParams, dt: float,
                   params: Optional[PicardParams] = None) -> float:
    """sup over the grid of ||u_picard - u_march||_{Z^-1}, both on [0, T] with step dt."""
    if params is None:
        params = choose_parameters(u0, nu, p, dt)
    res = picard_solve(u0, nu, params)
    up = res.trajectory
    um = march(u0, up.dt, len(up) - 1, nu)
    return (um - up).linf(p)


def random_ball_element(lattice: FrequencyLattice, times, r: float, p: GevreyParams,
                        rng: np.random.Generator, fill: Optional[float] = None) -> Trajectory:
    """Random divergence-free trajectory w with sup ||w||_{Z^-1} <= fill r and int ||w||_{Z^1} <= fill r.

    w(t) = e^{t Δ} phi_a + (t / T) phi_b with random phi_a, phi_b, rescaled to the
    requested fraction of the ball radius (uniform in (0.05, 1) when fill is None).
    """
    times = np.asarray(times, dtype=float)
    phi_a = random_divfree_field(lattice, rng.uniform(0.3, 2.0), 1.0, int(rng.integers(2**32)))
    phi_b = random_divfree_field(lattice, rng.uniform(0.3, 2.0), 1.0, int(rng.integers(2**32)))
    ramp = (times / times[-1])[:, None, None, None, None]
    w = Trajectory.heat_flow(phi_a, times)
    w = w._like(w.coeffs + ramp * phi_b.coeffs[None] * rng.uniform(0.0, 1.0))
    size = max(w.linf(p), w.l1(p))
    if fill is None:
        fill = rng.uniform(0.05, 1.0)
    return w.scaled(fill * r / size) if size > 0 else w
