"""Lattice convolution and the Navier-Stokes bilinear term B(u, v) = P div(u ⊗ v).

Two convolution routes are provided: a direct O(|K|^2) shift-and-add sum and
a zero-padded FFT route. The padded transform grid has side ``2M``; products
of two lattice fields reach at most ``|k_i| <= M - 2``, so no alias lands on a
retained mode and the truncated result is the exact lattice convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .lattice import (
    FrequencyLattice,
    SpectralScalarField,
    SpectralVectorField,
    conjugate_flip,
    enforce_hermitian,
    leray_project,
)

PAD_FACTOR = 2


@dataclass(frozen=True, eq=False)
class TensorField:
    """3x3 complex coefficient matrix per mode; entry [i, j] is the transform of u_j v_i."""

    lattice: FrequencyLattice
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (3, 3) + self.lattice.shape:
            raise ValueError(f"bad tensor coefficient shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def magnitude(self) -> np.ndarray:
        """Per-mode Frobenius norm."""
        c = self.coeffs
        return np.sqrt(np.sum(c.real**2 + c.imag**2, axis=(0, 1)))


def _same_lattice(f, g):
    if f.lattice != g.lattice:
        raise ValueError("fields live on different lattices")
    return f.lattice


# -- direct route ----------------------------------------------------------

def _convolve_cubes_direct(fc: np.ndarray, gc: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    h = lattice.kmax
    n = lattice.n
    out = np.zeros(lattice.shape, dtype=complex)
    nz = np.argwhere((gc != 0) & lattice.mask)
    for idx in nz:
        m = idx - h
        dst, src = [], []
        for mi in m:
            lo, hi = max(-h, -h + mi), min(h, h + mi)
            if lo > hi:
                break
            dst.append(slice(lo + h, hi + h + 1))
            src.append(slice(lo - mi + h, hi - mi + h + 1))
        else:
            out[tuple(dst)] += gc[tuple(idx)] * fc[tuple(src)]
    out[h, h, h] = 0.0
    assert out.shape == (n, n, n)
    return out


def convolve_direct(f: SpectralScalarField, g: SpectralScalarField) -> SpectralScalarField:
    """h(k) = sum_m f(k - m) g(m), truncated to the lattice."""
    lat = _same_lattice(f, g)
    return SpectralScalarField(lat, _convolve_cubes_direct(f.coeffs, g.coeffs, lat))


# -- padded FFT route ------------------------------------------------------

@lru_cache(maxsize=None)
def _grid_index(lattice: FrequencyLattice):
    P = PAD_FACTOR * lattice.M
    idx = lattice.k1d % P
    return P, np.ix_(idx, idx, idx)


def _to_grid(c: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    P, ix = _grid_index(lattice)
    grid = np.zeros(c.shape[:-3] + (P, P, P), dtype=complex)
    grid[(Ellipsis,) + ix] = c
    return grid


def _from_grid(grid: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    _, ix = _grid_index(lattice)
    out = grid[(Ellipsis,) + ix].copy()
    out[..., ~lattice.mask] = 0.0
    return out


def convolve_fast(f: SpectralScalarField, g: SpectralScalarField) -> SpectralScalarField:
    lat = _same_lattice(f, g)
    fx = sfft.ifftn(_to_grid(f.coeffs, lat), norm="forward")
    gx = sfft.ifftn(_to_grid(g.coeffs, lat), norm="forward")
    return SpectralScalarField(lat, _from_grid(sfft.fftn(fx * gx, norm="forward"), lat))


# Real-transform helpers for Hermitian (real-valued) fields; leading axes are batched.

def _to_physical(c: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    P, _ = _grid_index(lattice)
    half = _to_grid(c, lattice)[..., : P // 2 + 1]
    return sfft.irfftn(half, s=(P, P, P), axes=(-3, -2, -1), norm="forward")


def _from_physical(x: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    P, _ = _grid_index(lattice)
    h = lattice.kmax
    half = sfft.rfftn(x, axes=(-3, -2, -1), norm="forward")
    idx = lattice.k1d % P
    out = np.empty(x.shape[:-3] + lattice.shape, dtype=complex)
    out[..., h:] = half[(Ellipsis,) + np.ix_(idx, idx, np.arange(h + 1))]
    out[..., :h] = np.conj(conjugate_flip(out))[..., :h]
    out[..., ~lattice.mask] = 0.0
    return out


def tensor_arrays(U: np.ndarray, V: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    """Coefficients of v_i u_j for stacks of real vector fields, shape (..., 3, 3, n, n, n)."""
    ux = _to_physical(U, lattice)
    vx = ux if V is U else _to_physical(V, lattice)
    prod = vx[..., :, None, :, :, :] * ux[..., None, :, :, :, :]
    return _from_physical(prod, lattice)


def divergence_arrays(T: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    """(div T)_i = sum_j i k_j T_ij."""
    return 1j * np.einsum("jabc,...ijabc->...iabc", lattice.kvec, T)


def leray_arrays(c: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    kdotu = np.einsum("iabc,...iabc->...abc", lattice.kvec, c)
    out = c - lattice.kvec * (kdotu / lattice.ksq_safe)[..., None, :, :, :]
    out[..., ~lattice.mask] = 0.0
    return out


def hermitian_arrays(c: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    out = 0.5 * (c + np.conj(conjugate_flip(c)))
    out[..., ~lattice.mask] = 0.0
    return out


def bilinear_arrays(U: np.ndarray, V: np.ndarray, lattice: FrequencyLattice,
                    project: bool = True) -> np.ndarray:
    """Batched B(u, v) on coefficient stacks of shape (..., 3, n, n, n)."""
    out = divergence_arrays(tensor_arrays(U, V, lattice), lattice)
    if project:
        out = leray_arrays(out, lattice)
    return hermitian_arrays(out, lattice)


def tensor_product(u: SpectralVectorField, v: SpectralVectorField, method: str = "fast") -> TensorField:
    lat = _same_lattice(u, v)
    if method == "fast":
        return TensorField(lat, tensor_arrays(u.coeffs, v.coeffs, lat))
    if method == "direct":
        T = np.empty((3, 3) + lat.shape, dtype=complex)
        for i in range(3):
            for j in range(3):
                T[i, j] = _convolve_cubes_direct(v.coeffs[i], u.coeffs[j], lat)
        return TensorField(lat, T)
    raise ValueError(f"unknown method {method!r}; use 'direct' or 'fast'")


def divergence(T: TensorField) -> SpectralVectorField:
    return SpectralVectorField(T.lattice, divergence_arrays(T.coeffs, T.lattice))


def bilinear_B(u: SpectralVectorField, v: SpectralVectorField, method: str = "fast") -> SpectralVectorField:
    """B(u, v) = P div(u ⊗ v); component i is P(sum_j d_j(u_j v_i))."""
    if method == "fast":
        lat = _same_lattice(u, v)
        V = u.coeffs if v is u else v.coeffs
        return SpectralVectorField(lat, bilinear_arrays(u.coeffs, V, lat))
    out = leray_project(divergence(tensor_product(u, v, method)))
    return enforce_hermitian(out)
