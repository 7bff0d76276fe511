"""Constructive local existence: frequency splitting and Picard iteration in a ball.

Initial data are split at a cutoff N into a low-frequency part v0, carried by
the heat flow, and a small high-frequency tail w0. The remainder w = u - v is
the fixed point of

    psi(w)(t) = e^{t Δ} w0 - int_0^t e^{(t - tau) Δ} B(v + w, v + w) dtau

in the ball B_r of the space Z_T with norm
``sup_t ||f||_{Z^{-1}} + int_0^T ||f||_{Z^1} dt``.

All smallness thresholds are stated for unit viscosity. Public entry points
take the physical viscosity and work on the rescaled problem
``u_nu(t, x) = nu * u(nu t, x)``; PicardParams therefore hold rescaled times.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import FrequencyLattice, SpectralVectorField
from .nonlinear import bilinear_arrays
from .norms import GevreyParams, weight_array, z_norm, z_norm_batch
from .semigroup import duhamel_cumulative_arrays, trapezoid_integral

DEFAULT_R = 0.05
T_MAX = 1.0


class InfeasibleParameters(ValueError):
    """The initial data are too large for the smallness conditions of the construction."""


@dataclass(frozen=True)
class PicardParams:
    N: float
    r: float
    epsilon: float
    T: float
    dt: float
    gevrey: GevreyParams = field(default_factory=GevreyParams)
    max_iters: int = 60
    tol: float = 1e-12
    # "strong": 4(eps + 2r + |u0|) <= 1/2, the form the contraction bound needs.
    # "weak":   4(eps + 2r |u0|) <= 1/2, the form first written down.
    contraction_form: str = "strong"

    def __post_init__(self):
        if not 0 < self.r < 0.1:
            raise ValueError(f"r must lie in (0, 1/10), got {self.r}")
        if self.N <= 0 or self.epsilon <= 0 or self.T <= 0 or self.dt <= 0:
            raise ValueError("N, epsilon, T and dt must be positive")
        if self.n_steps < 1 or abs(self.n_steps * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T = {self.T} must be a positive integer multiple of dt = {self.dt}")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters must be >= 1 and tol positive")
        if self.contraction_form not in ("strong", "weak"):
            raise ValueError("contraction_form must be 'strong' or 'weak'")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gevrey"] = {"a": self.gevrey.a, "sigma": self.gevrey.sigma}
        return d


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fields on a uniform time grid; ``coeffs`` has shape (nodes, 3, n, n, n)."""

    lattice: FrequencyLattice
    times: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if self.coeffs.shape != (len(t), 3) + self.lattice.shape:
            raise ValueError(f"coefficient stack shape {self.coeffs.shape} does not match grid")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def __len__(self):
        return len(self.times)

    def field(self, j: int) -> SpectralVectorField:
        return SpectralVectorField(self.lattice, self.coeffs[j])

    def _like(self, coeffs) -> "Trajectory":
        return Trajectory(self.lattice, self.times, coeffs)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        _check_grids(self, other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        _check_grids(self, other)
        return self._like(self.coeffs - other.coeffs)

    def scaled(self, s: float) -> "Trajectory":
        return self._like(self.coeffs * s)

    def magnitudes(self) -> np.ndarray:
        c = self.coeffs
        return np.sqrt(np.sum(c.real**2 + c.imag**2, axis=1))

    def norms(self, p: GevreyParams) -> np.ndarray:
        return z_norm_batch(self.magnitudes(), self.lattice, p)

    def linf(self, p: GevreyParams) -> float:
        """sup over nodes of the Z^{-1}_{a,sigma} norm."""
        return float(np.max(self.norms(p.with_rho(-1))))

    def l1(self, p: GevreyParams) -> float:
        """Trapezoid time integral of the Z^1_{a,sigma} norm."""
        return trapezoid_integral(self.norms(p.with_rho(1)), self.dt)

    def zt_norm(self, p: GevreyParams) -> float:
        return self.linf(p) + self.l1(p)

    @classmethod
    def heat_flow(cls, f: SpectralVectorField, times, nu: float = 1.0) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        mult = np.exp(-nu * times[:, None, None, None] * f.lattice.ksq)
        return cls(f.lattice, times, mult[:, None] * f.coeffs[None])

    @classmethod
    def zeros(cls, lattice: FrequencyLattice, times) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        return cls(lattice, times, np.zeros((len(times), 3) + lattice.shape, dtype=complex))


def _check_grids(a: Trajectory, b: Trajectory):
    if a.lattice != b.lattice or a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise ValueError("trajectories live on different grids")


def split_frequencies(u0: SpectralVectorField, N: float):
    """(v0, w0) with v0 on |k| <= N and w0 on |k| > N."""
    if N <= 0:
        raise ValueError(f"cutoff N must be positive, got {N}")
    low = u0.lattice.kabs <= N
    v0 = np.where(low, u0.coeffs, 0.0)
    return SpectralVectorField(u0.lattice, v0), SpectralVectorField(u0.lattice, u0.coeffs - v0)


def heat_l1_closed_form(v0: SpectralVectorField, T: float, p: GevreyParams) -> float:
    """int_0^T ||e^{t Δ} v0||_{Z^1} dt = sum_k (1 - e^{-T|k|^2}) |k|^{-1} e^{a|k|^{1/s}} |v0(k)|."""
    lat = v0.lattice
    w = weight_array(lat, p.with_rho(-1)) * -np.expm1(-T * lat.ksq)
    return math.fsum((w * v0.magnitude())[lat.mask].tolist())


def _tail_norm(u0: SpectralVectorField, N: float, p: GevreyParams) -> float:
    return z_norm(split_frequencies(u0, N)[1], p.with_rho(-1))


def constraint_report(u0n: SpectralVectorField, params: PicardParams) -> dict:
    """Evaluate every smallness condition for rescaled data u0n; each entry is (lhs, rhs, ok)."""
    p = params.gevrey
    z = z_norm(u0n, p.with_rho(-1))
    r, eps = params.r, params.epsilon
    v0, w0 = split_frequencies(u0n, params.N)
    vl1 = heat_l1_closed_form(v0, params.T, p)
    rows = {
        "r_range": (r, 0.1, 0 < r < 0.1),
        "w0_tail": (z_norm(w0, p.with_rho(-1)), r / 5, z_norm(w0, p.with_rho(-1)) < r / 5),
        "eps_u0": (2 * eps * z, r / 5, 2 * eps * z < r / 5),
        "u0_plus_eps": (z + eps, 0.2, z + eps < 0.2),
        "contraction_strong": (4 * (eps + 2 * r + z), 0.5, 4 * (eps + 2 * r + z) <= 0.5),
        "contraction_weak": (4 * (eps + 2 * r * z), 0.5, 4 * (eps + 2 * r * z) <= 0.5),
        "v_l1": (vl1, eps, vl1 < eps),
    }
    required = [k for k in rows if not k.startswith("contraction_")]
    required.append(f"contraction_{params.contraction_form}")
    return {
        "u0_norm": z,
        "conditions": {k: {"lhs": v[0], "rhs": v[1], "ok": bool(v[2])} for k, v in rows.items()},
        "feasible": all(rows[k][2] for k in required),
    }


def choose_parameters(u0: SpectralVectorField, nu: float, p: GevreyParams, dt: float,
                      contraction_form: str = "strong", **kw) -> PicardParams:
    """Pick (N, r, eps, T) satisfying every smallness condition; dt is in physical time."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    p = p.with_rho(-1)
    u0n = u0 * (1.0 / nu)
    dtn = dt * nu
    z = z_norm(u0n, p)
    lat = u0.lattice
    top = float(lat.kabs.max()) + 1.0

    def quantise(T):
        n = int(math.floor(T / dtn + 1e-9))
        if n < 1:
            raise InfeasibleParameters(f"time step {dt} exceeds the admissible horizon {T / nu:.3g}")
        return n * dtn

    if z == 0.0:
        r = DEFAULT_R
        return PicardParams(N=top, r=r, epsilon=r / 20, T=quantise(T_MAX), dt=dtn, gevrey=p,
                            contraction_form=contraction_form, **kw)

    if contraction_form == "strong":
        limit = 0.125
    elif contraction_form == "weak":
        limit = 0.2
    else:
        raise ValueError("contraction_form must be 'strong' or 'weak'")
    if z >= limit:
        raise InfeasibleParameters(
            f"||u0/nu||_Z^-1 = {z:.4g} is too large; the {contraction_form} conditions need < {limit}"
        )

    if contraction_form == "strong":
        r = min(DEFAULT_R, (0.125 - z) / 4)
        eps_cap = 0.125 - 2 * r - z
    else:
        r = DEFAULT_R
        eps_cap = 0.125 - 2 * r * z
    eps = 0.5 * min(eps_cap, 0.2 - z, r / (10 * z))

    # grow the cutoff through the lattice shells until the tail is small
    shells = [0.5] + sorted(set(np.round(lat.kabs[lat.mask], 12).tolist())) + [top]
    N = next(s for s in shells if _tail_norm(u0n, s, p) < r / 5)

    v0, _ = split_frequencies(u0n, N)
    if heat_l1_closed_form(v0, T_MAX, p) < eps:
        T = T_MAX
    else:
        lo, hi = 0.0, T_MAX
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if heat_l1_closed_form(v0, mid, p) < eps:
                lo = mid
            else:
                hi = mid
        T = lo
    params = PicardParams(N=N, r=r, epsilon=eps, T=quantise(T), dt=dtn, gevrey=p,
                          contraction_form=contraction_form, **kw)
    report = constraint_report(u0n, params)
    if not report["feasible"]:
        raise InfeasibleParameters(f"parameter search failed: {report['conditions']}")
    return params


def _nonlinear_stack(U: Trajectory) -> np.ndarray:
    return bilinear_arrays(U.coeffs, U.coeffs, U.lattice)


def psi_apply(w: Trajectory, v: Trajectory, w0: SpectralVectorField, params: PicardParams,
              nu: float = 1.0) -> Trajectory:
    """psi(w) = e^{t nu Δ} w0 - Duhamel(B(v + w, v + w)) on the trajectory grid."""
    _check_grids(w, v)
    if w0.lattice != w.lattice:
        raise ValueError("w0 is on a different lattice")
    u = v + w
    duh = duhamel_cumulative_arrays(_nonlinear_stack(u), w.lattice, w.dt, nu)
    lin = Trajectory.heat_flow(w0, w.times, nu)
    return w._like(lin.coeffs - duh)


def contraction_ratio(w1: Trajectory, w2: Trajectory, v: Trajectory, w0: SpectralVectorField,
                      params: PicardParams, nu: float = 1.0) -> float:
    p = params.gevrey
    den = (w2 - w1).zt_norm(p)
    if den == 0.0:
        raise ValueError("contraction ratio needs two distinct trajectories")
    num = (psi_apply(w2, v, w0, params, nu) - psi_apply(w1, v, w0, params, nu)).zt_norm(p)
    return num / den


def ball_ledger(w: Trajectory, r: float, p: GevreyParams) -> dict:
    linf, l1 = w.linf(p), w.l1(p)
    return {"linf_zm1": linf, "l1_zp1": l1, "in_ball": bool(linf <= r and l1 <= r)}


def mild_residual(u: Trajectory, u0: SpectralVectorField, p: GevreyParams, nu: float = 1.0) -> float:
    """||u - (e^{t nu Δ} u0 - Duhamel(B(u, u)))||_{Z_T}."""
    duh = duhamel_cumulative_arrays(_nonlinear_stack(u), u.lattice, u.dt, nu)
    rhs = Trajectory.heat_flow(u0, u.times, nu).coeffs - duh
    return u._like(u.coeffs - rhs).zt_norm(p)


def ij_estimates(v: Trajectory, w: Trajectory, w0: SpectralVectorField, params: PicardParams) -> dict:
    """The ten quantities I_0..I_4 and J_0..J_4, each divided by r/5 (unit viscosity).

    I_k is sup_t int_0^t ||e^{(t-tau)Δ} F_k||_{Z^-1}, evaluated per mode on |F_k(k)|
    with the same quadrature; J_k is int_0^T ||int_0^t e^{(t-tau)Δ} F_k||_{Z^1} dt.
    F_1..F_4 are B(v,v), B(v,w), B(w,v), B(w,w).
    """
    lat, p, dt = v.lattice, params.gevrey, v.dt
    pm1, pp1 = p.with_rho(-1), p.with_rho(1)
    lin = Trajectory.heat_flow(w0, v.times)
    I = [float(np.max(lin.norms(pm1)))]
    J = [lin.l1(p)]
    for a, b in ((v, v), (v, w), (w, v), (w, w)):
        F = bilinear_arrays(a.coeffs, b.coeffs, lat)
        mags = np.sqrt(np.sum(F.real**2 + F.imag**2, axis=1))
        I.append(float(np.max(z_norm_batch(duhamel_cumulative_arrays(mags, lat, dt, 1.0), lat, pm1))))
        duh = Trajectory(lat, v.times, duhamel_cumulative_arrays(F, lat, dt, 1.0))
        J.append(duh.l1(p))
    bound = params.r / 5
    out = {f"I{k}": I[k] / bound for k in range(5)}
    out.update({f"J{k}": J[k] / bound for k in range(5)})
    return out


@dataclass
class PicardResult:
    trajectory: Trajectory      # u = v + w in physical units
    w: Trajectory               # rescaled units
    v: Trajectory               # rescaled units
    w0: SpectralVectorField     # rescaled units
    diagnostics: dict


def picard_solve(u0: SpectralVectorField, nu: float, params: PicardParams) -> PicardResult:
    """Iterate w_{m+1} = psi(w_m) from the heat flow of w0 until the Z_T gap is below tol."""
    p = params.gevrey
    u0n = u0 * (1.0 / nu)
    report = constraint_report(u0n, params)
    if not report["feasible"]:
        raise InfeasibleParameters(f"infeasible parameters: {report['conditions']}")
    times = params.times
    v0, w0 = split_frequencies(u0n, params.N)
    v = Trajectory.heat_flow(v0, times)
    w = Trajectory.heat_flow(w0, times)

    gaps, ratios, ledger = [], [], [ball_ledger(w, params.r, p)]
    status, above = "max_iters", 0
    for _ in range(params.max_iters):
        w_next = psi_apply(w, v, w0, params)
        gap = (w_next - w).zt_norm(p)
        if gaps and gaps[-1] > 0:
            ratios.append(gap / gaps[-1])
            above = above + 1 if ratios[-1] > 1 else 0
        gaps.append(gap)
        w = w_next
        ledger.append(ball_ledger(w, params.r, p))
        if gap <= params.tol:
            status = "converged"
            break
        if above >= 3:
            status = "diverged"
            break

    u = v + w
    residual = mild_residual(u, u0n, p)
    diagnostics = {
        "status": status,
        "iterations": len(gaps),
        "params": params.to_dict(),
        "nu": nu,
        "constraints": report,
        "gaps": gaps,
        "ratios": ratios,
        "ball_ledger": ledger,
        "ij_margins": ij_estimates(v, w, w0, params),
        "residual": residual,
    }
    physical = Trajectory(u0.lattice, times / nu, u.coeffs * nu)
    return PicardResult(physical, w, v, w0, diagnostics)
