"""Periodic frequency lattice and spectral field value types.

Fields live on the 2π-periodic box, so frequencies are integer vectors.
Coefficients are stored as dense cubes of side ``n = M - 1`` centred on the
zero mode: array index ``i`` along an axis holds frequency ``i - (M/2 - 1)``.
The zero mode slot is kept at exactly zero and the boundary planes
``|k_i| = M/2`` are not stored, so ``k -> -k`` is a reversal of every axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi
DIVFREE_TOL = 1e-12


@dataclass(frozen=True)
class FrequencyLattice:
    M: int
    L: float = TWO_PI

    @property
    def n(self) -> int:
        """Stored modes per axis."""
        return self.M - 1

    @property
    def kmax(self) -> int:
        return self.M // 2 - 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def k1d(self) -> np.ndarray:
        return np.arange(-self.kmax, self.kmax + 1)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Integer frequency vectors, shape (3, n, n, n)."""
        k = self.k1d
        return np.stack(np.meshgrid(k, k, k, indexing="ij")).astype(float)

    @cached_property
    def ksq(self) -> np.ndarray:
        return np.sum(self.kvec**2, axis=0)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def mask(self) -> np.ndarray:
        """True on the mode set K (everything except the zero mode)."""
        m = np.ones(self.shape, dtype=bool)
        m[self.kmax, self.kmax, self.kmax] = False
        return m

    @cached_property
    def ksq_safe(self) -> np.ndarray:
        # 1 at the zero mode so divisions by |k|^2 stay finite there
        return np.where(self.mask, self.ksq, 1.0)

    @property
    def size(self) -> int:
        """Number of modes in K."""
        return self.n**3 - 1

    def modes(self) -> np.ndarray:
        """Canonical enumeration of K (C order over the cube), shape (|K|, 3)."""
        return self.kvec.reshape(3, -1).T[self.mask.ravel()].astype(int)

    def index(self, k) -> tuple[int, int, int]:
        k = tuple(int(c) for c in k)
        if any(abs(c) > self.kmax for c in k):
            raise KeyError(f"mode {k} is outside the lattice (|k_i| <= {self.kmax})")
        if k == (0, 0, 0):
            raise KeyError("the zero mode is not part of the lattice")
        return tuple(c + self.kmax for c in k)


@lru_cache(maxsize=None)
def build_lattice(M: int) -> FrequencyLattice:
    if not isinstance(M, (int, np.integer)) or isinstance(M, bool):
        raise TypeError(f"M must be an integer, got {M!r}")
    if M % 2 or not 4 <= M <= 128:
        raise ValueError(f"M must be even with 4 <= M <= 128, got {M}")
    return FrequencyLattice(int(M))


def conjugate_flip(c: np.ndarray) -> np.ndarray:
    """Map ``c(k) -> c(-k)`` on the trailing three axes."""
    return c[..., ::-1, ::-1, ::-1]


class _SpectralField:
    """Shared arithmetic for scalar and vector coefficient cubes."""

    __slots__ = ()
    lattice: FrequencyLattice
    coeffs: np.ndarray

    def _check(self, other):
        if type(other) is not type(self):
            return NotImplemented
        if other.lattice != self.lattice:
            raise ValueError("fields live on different lattices")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return type(self)(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return type(self)(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, s):
        if not np.isscalar(s):
            return NotImplemented
        return type(self)(self.lattice, self.coeffs * s)

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(self.lattice, -self.coeffs)

    def is_hermitian(self, atol: float = 0.0) -> bool:
        diff = self.coeffs - np.conj(conjugate_flip(self.coeffs))
        return bool(np.all(np.abs(diff) <= atol))


@dataclass(frozen=True, eq=False)
class SpectralScalarField(_SpectralField):
    lattice: FrequencyLattice
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.lattice.shape:
            raise ValueError(f"expected coefficients of shape {self.lattice.shape}, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, lattice: FrequencyLattice) -> "SpectralScalarField":
        return cls(lattice, np.zeros(lattice.shape, dtype=complex))

    def magnitude(self) -> np.ndarray:
        return np.abs(self.coeffs)


@dataclass(frozen=True, eq=False)
class SpectralVectorField(_SpectralField):
    """Complex 3-vector Fourier coefficients per lattice mode."""

    lattice: FrequencyLattice
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (3,) + self.lattice.shape:
            raise ValueError(
                f"expected coefficients of shape {(3,) + self.lattice.shape}, got {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, lattice: FrequencyLattice) -> "SpectralVectorField":
        return cls(lattice, np.zeros((3,) + lattice.shape, dtype=complex))

    @classmethod
    def from_modes(cls, lattice: FrequencyLattice, modes: dict) -> "SpectralVectorField":
        """Build a field from ``{k: (c1, c2, c3)}``; conjugate partners are filled in."""
        c = np.zeros((3,) + lattice.shape, dtype=complex)
        for k, val in modes.items():
            val = np.asarray(val, dtype=complex)
            c[(slice(None),) + lattice.index(k)] = val
            c[(slice(None),) + lattice.index(tuple(-int(x) for x in k))] = np.conj(val)
        return cls(lattice, c)

    def component(self, i: int) -> SpectralScalarField:
        return SpectralScalarField(self.lattice, self.coeffs[i])

    def magnitude(self) -> np.ndarray:
        """Per-mode Euclidean magnitude of the complex 3-vector."""
        return np.sqrt(np.sum(self.coeffs.real**2 + self.coeffs.imag**2, axis=0))

    def at(self, k) -> np.ndarray:
        return self.coeffs[(slice(None),) + self.lattice.index(k)]


def enforce_hermitian(f):
    """Average each conjugate pair so that ``u(-k) = conj(u(k))``."""
    c = 0.5 * (f.coeffs + np.conj(conjugate_flip(f.coeffs)))
    c[..., ~f.lattice.mask] = 0.0
    return type(f)(f.lattice, c)


def leray_project(f: SpectralVectorField) -> SpectralVectorField:
    lat = f.lattice
    kdotu = np.einsum("i...,i...->...", lat.kvec, f.coeffs)
    c = f.coeffs - lat.kvec * (kdotu / lat.ksq_safe)
    c[:, ~lat.mask] = 0.0
    return SpectralVectorField(lat, c)


def divergence_residual(f: SpectralVectorField) -> float:
    """max over modes of |k . u(k)|."""
    kdotu = np.einsum("i...,i...->...", f.lattice.kvec, f.coeffs)
    return float(np.max(np.abs(kdotu)))


def is_divergence_free(f: SpectralVectorField, tol: float = DIVFREE_TOL) -> bool:
    kdotu = np.abs(np.einsum("i...,i...->...", f.lattice.kvec, f.coeffs))
    return bool(np.all(kdotu <= tol * np.maximum(1.0, f.magnitude())))


def _disk_samples(rng: np.random.Generator, shape, radius: float) -> np.ndarray:
    # uniform on the complex disk of the given radius
    r = radius * np.sqrt(rng.random(shape))
    th = TWO_PI * rng.random(shape)
    return r * np.exp(1j * th)


def random_divfree_field(
    lattice: FrequencyLattice, decay_rate: float, amplitude: float, seed: int
) -> SpectralVectorField:
    """Random real, divergence-free field with |u(k)| <= amplitude * exp(-decay_rate |k|).

    Each component is drawn inside a disk of radius 1/sqrt(3), so the raw vector
    respects the envelope; Hermitian averaging and the Leray projection are both
    non-expansive per mode and keep it there.
    """
    if decay_rate <= 0:
        raise ValueError("decay_rate must be positive")
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    rng = np.random.default_rng(seed)
    raw = _disk_samples(rng, (3,) + lattice.shape, 1.0 / math.sqrt(3.0))
    raw *= amplitude * np.exp(-decay_rate * lattice.kabs)
    raw[:, ~lattice.mask] = 0.0
    f = leray_project(enforce_hermitian(SpectralVectorField(lattice, raw)))
    return f


def random_scalar_field(
    lattice: FrequencyLattice, decay_rate: float, amplitude: float, seed
) -> SpectralScalarField:
    """Random real scalar field with |f(k)| <= amplitude * exp(-decay_rate |k|)."""
    rng = np.random.default_rng(seed)
    raw = _disk_samples(rng, lattice.shape, 1.0)
    raw *= amplitude * np.exp(-decay_rate * lattice.kabs)
    return enforce_hermitian(SpectralScalarField(lattice, raw))


def taylor_green(lattice: FrequencyLattice, amplitude: float = 1.0) -> SpectralVectorField:
    """u = A (sin x cos y cos z, -cos x sin y cos z, 0)."""
    modes = {}
    for sy in (1, -1):
        for sz in (1, -1):
            # coefficient of e^{i(x + sy y + sz z)}: 1/(8i) in u1, -sy/(8i) in u2
            modes[(1, sy, sz)] = (amplitude / 8j, -sy * amplitude / 8j, 0.0)
    return SpectralVectorField.from_modes(lattice, modes)


def single_mode(lattice: FrequencyLattice, amplitude: float = 1.0) -> SpectralVectorField:
    """Shear mode u = (0, 2A cos x, 0) on |k| = 1; its nonlinearity vanishes identically."""
    return SpectralVectorField.from_modes(lattice, {(1, 0, 0): (0.0, amplitude, 0.0)})


# -- GNSF1 snapshot format -------------------------------------------------

def _is_stored_representative(k) -> bool:
    # first nonzero component positive picks one mode of each conjugate pair
    for c in k:
        if c != 0:
            return c > 0
    return False


def write_snapshot(f: SpectralVectorField, path) -> None:
    lat = f.lattice
    lines = [f"GNSF1 M={lat.M} L={lat.L:.17g}"]
    for k in lat.modes():
        if not _is_stored_representative(k):
            continue
        vals = f.at(k)
        for comp in range(3):
            v = vals[comp]
            lines.append(f"{k[0]} {k[1]} {k[2]} {comp} {float(v.real)!r} {float(v.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_snapshot(path) -> SpectralVectorField:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text:
        raise ValueError(f"{path}: empty snapshot")
    head = text[0].split()
    if len(head) != 3 or head[0] != "GNSF1" or not head[1].startswith("M=") or not head[2].startswith("L="):
        raise ValueError(f"{path}: bad GNSF1 header {text[0]!r}")
    lat = build_lattice(int(head[1][2:]))
    L = float(head[2][2:])
    if L != lat.L:
        raise ValueError(f"{path}: only L = 2*pi is supported, got {L!r}")
    c = np.zeros((3,) + lat.shape, dtype=complex)
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 'k1 k2 k3 comp re im'")
        k = tuple(int(p) for p in parts[:3])
        comp = int(parts[3])
        if comp not in (0, 1, 2):
            raise ValueError(f"{path}:{lineno}: component must be 0, 1 or 2")
        if not _is_stored_representative(k):
            raise ValueError(f"{path}:{lineno}: mode {k} is not a stored representative")
        val = complex(float(parts[4]), float(parts[5]))
        c[(comp,) + lat.index(k)] = val
        c[(comp,) + lat.index(tuple(-x for x in k))] = val.conjugate()
    return SpectralVectorField(lat, c)
