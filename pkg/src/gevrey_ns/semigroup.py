"""Heat semigroup multiplier and exponential-trapezoidal Duhamel quadrature.

On a subinterval of length h the forcing is interpolated linearly and
integrated against the exact kernel exp(-lam (t - tau)), lam = nu |k|^2:

    int_0^h e^{-lam (h - s)} [(1 - s/h) F0 + (s/h) F1] ds
        = h (phi1 - phi2)(x) F0 + h phi2(x) F1,      x = lam h,

    phi1(x) = (1 - e^{-x}) / x,    phi2(x) = (x - 1 + e^{-x}) / x^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import FrequencyLattice, SpectralVectorField

_SERIES_CUTOFF = 0.05


def heat_multiplier(lattice: FrequencyLattice, s: float, nu: float) -> np.ndarray:
    return np.exp(-nu * s * lattice.ksq)


def heat_apply(f, s: float, nu: float):
    """exp(nu s Δ) f, i.e. f(k) -> exp(-nu s |k|^2) f(k)."""
    if s < 0:
        raise ValueError(f"heat flow time must be nonnegative, got {s}")
    if s == 0:
        return type(f)(f.lattice, f.coeffs.copy())
    return type(f)(f.lattice, heat_multiplier(f.lattice, s, nu) * f.coeffs)


def phi1(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    small = x < _SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    direct = -np.expm1(-xs) / xs
    # alternating series; 8 terms keep the truncation below 1e-17 at the cutoff
    series = np.zeros_like(x)
    term = np.ones_like(x)
    for j in range(8):
        series += term
        term = term * (-x) / (j + 2)
    return np.where(small, series, direct)


def phi2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    small = x < _SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    direct = (np.expm1(-xs) + xs) / xs**2
    series = np.zeros_like(x)
    term = np.full_like(x, 0.5)
    for j in range(8):
        series += term
        term = term * (-x) / (j + 3)
    return np.where(small, series, direct)


def trapezoid_weights(lattice: FrequencyLattice, h: float, nu: float):
    """Per-mode weights (decay, w_left, w_right) for one subinterval of length h."""
    x = nu * h * lattice.ksq
    p1, p2 = phi1(x), phi2(x)
    return np.exp(-x), h * (p1 - p2), h * p2


@dataclass(frozen=True)
class DuhamelSamples:
    """Forcing fields on a uniform grid 0 = t_0 < ... < t_n."""

    times: np.ndarray
    fields: Sequence[SpectralVectorField]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("need at least two time nodes")
        if len(self.fields) != len(t):
            raise ValueError("one forcing field per time node is required")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            raise ValueError("time grid must be uniform")
        lat = self.fields[0].lattice
        if any(f.lattice != lat for f in self.fields):
            raise ValueError("all forcing fields must share one lattice")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def lattice(self) -> FrequencyLattice:
        return self.fields[0].lattice


def duhamel_cumulative_arrays(F: np.ndarray, lattice: FrequencyLattice, dt: float, nu: float) -> np.ndarray:
    """Duhamel integral at every node for a forcing stack F of shape (n+1, ..., n, n, n).

    Uses the recurrence I_{j+1} = e^{-x} I_j + w_left F_j + w_right F_{j+1}, I_0 = 0,
    which is the exponential-trapezoidal rule applied on [0, t_j] for every j.
    """
    decay, wl, wr = trapezoid_weights(lattice, dt, nu)
    out = np.empty_like(F)
    out[0] = 0.0
    for j in range(len(F) - 1):
        out[j + 1] = decay * out[j] + wl * F[j] + wr * F[j + 1]
    return out


def duhamel_cumulative(samples: DuhamelSamples, nu: float) -> list[SpectralVectorField]:
    lat = samples.lattice
    F = np.stack([f.coeffs for f in samples.fields])
    out = duhamel_cumulative_arrays(F, lat, samples.dt, nu)
    return [type(samples.fields[0])(lat, c) for c in out]


def duhamel_quadrature(samples: DuhamelSamples, nu: float) -> SpectralVectorField:
    """int_0^t exp(nu (t - tau) Δ) F(tau) dtau at the final node t = t_n."""
    return duhamel_cumulative(samples, nu)[-1]


def trapezoid_integral(values, dt: float) -> float:
    """Uniform-grid trapezoid rule, summed with fsum."""
    v = [float(x) for x in values]
    if len(v) < 2:
        return 0.0
    return math.fsum([0.5 * dt * v[0], 0.5 * dt * v[-1]] + [dt * x for x in v[1:-1]])


def trapezoid_cumulative(values, dt: float) -> np.ndarray:
    """Running trapezoid integral at every node (first entry 0)."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    if len(v) > 1:
        out[1:] = np.cumsum(0.5 * dt * (v[1:] + v[:-1]))
    return out
