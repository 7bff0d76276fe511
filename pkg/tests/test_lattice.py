import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gevrey_ns.lattice import (
    SpectralScalarField,
    SpectralVectorField,
    build_lattice,
    divergence_residual,
    enforce_hermitian,
    is_divergence_free,
    leray_project,
    random_divfree_field,
    read_snapshot,
    single_mode,
    taylor_green,
    write_snapshot,
)
from gevrey_ns.norms import GevreyParams, z_norm
from gevrey_ns.semigroup import heat_apply

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("M, count", [(4, 26), (6, 124), (8, 342)])
def test_lattice_size(M, count):
    lat = build_lattice(M)
    assert lat.size == count == (M - 1) ** 3 - 1
    assert len(lat.modes()) == count


def test_m4_modes_are_unit_cube():
    lat = build_lattice(4)
    expected = {k for k in itertools.product((-1, 0, 1), repeat=3) if k != (0, 0, 0)}
    assert {tuple(int(x) for x in k) for k in lat.modes()} == expected


@pytest.mark.parametrize("M", [3, 2, 130, 7])
def test_bad_sizes_rejected(M):
    with pytest.raises(ValueError):
        build_lattice(M)


def test_non_integer_size_rejected():
    with pytest.raises(TypeError):
        build_lattice(6.0)


def test_index_round_trip(lat6):
    for k in lat6.modes():
        idx = lat6.index(k)
        assert tuple(lat6.kvec[(slice(None),) + idx]) == tuple(k)
    with pytest.raises(KeyError):
        lat6.index((3, 0, 0))


def test_hermitian_idempotent_bitwise(rfield):
    assert rfield.is_hermitian()
    out = enforce_hermitian(rfield)
    assert np.array_equal(out.coeffs, rfield.coeffs)


def test_hermitian_averaging_formula(lat4):
    c = np.zeros((3,) + lat4.shape, dtype=complex)
    c[(0,) + lat4.index((1, 0, 0))] = 1.0 + 0.0j
    out = enforce_hermitian(SpectralVectorField(lat4, c))
    assert out.at((1, 0, 0))[0] == 0.5
    assert out.at((-1, 0, 0))[0] == 0.5
    assert out.is_hermitian()


def test_hermitian_complex_pair(lat4):
    c = np.zeros(lat4.shape, dtype=complex)
    c[lat4.index((0, 1, 1))] = 2.0 + 4.0j
    out = enforce_hermitian(SpectralScalarField(lat4, c))
    assert out.coeffs[lat4.index((0, 1, 1))] == 1.0 + 2.0j
    assert out.coeffs[lat4.index((0, -1, -1))] == 1.0 - 2.0j


def test_zero_field_stays_zero(lat4):
    z = SpectralVectorField.zeros(lat4)
    assert not np.any(enforce_hermitian(z).coeffs)
    assert not np.any(leray_project(z).coeffs)
    assert divergence_residual(z) == 0.0


def test_leray_examples(lat4):
    f = SpectralVectorField.from_modes(lat4, {(1, 0, 0): (1, 0, 0)})
    assert np.allclose(leray_project(f).at((1, 0, 0)), 0.0, atol=0)
    g = SpectralVectorField.from_modes(lat4, {(1, 1, 0): (1, 0, 0)})
    assert np.allclose(leray_project(g).at((1, 1, 0)), [0.5, -0.5, 0.0], rtol=0, atol=1e-16)
    h = SpectralVectorField.from_modes(lat4, {(1, 1, 0): (1, -1, 0.3)})
    assert np.array_equal(leray_project(h).coeffs, h.coeffs)


def test_divergence_residual_example(lat4):
    A = 2.5
    f = SpectralVectorField.from_modes(lat4, {(0, 1, 0): (0, A, 0)})
    assert divergence_residual(f) == A


@given(seed=seeds)
def test_leray_properties(seed):
    lat = build_lattice(6)
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(3,) + lat.shape) + 1j * rng.normal(size=(3,) + lat.shape)
    raw[:, ~lat.mask] = 0
    f = SpectralVectorField(lat, raw)
    once = leray_project(f)
    twice = leray_project(once)
    scale = np.max(once.magnitude())
    assert np.max(np.abs(twice.coeffs - once.coeffs)) <= 1e-14 * np.max(f.magnitude())
    assert divergence_residual(once) <= 1e-12 * scale
    assert np.all(once.magnitude() <= f.magnitude() * (1 + 1e-15))
    for rho in (-1, 0, 1):
        p = GevreyParams(rho, 1.0, 2.0)
        assert z_norm(once, p) <= z_norm(f, p) * (1 + 1e-15)


@given(seed=seeds, s=st.floats(0.0, 3.0))
def test_hermitian_survives_heat(seed, s):
    lat = build_lattice(6)
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(3,) + lat.shape) + 1j * rng.normal(size=(3,) + lat.shape)
    f = enforce_hermitian(SpectralVectorField(lat, raw))
    assert f.is_hermitian()
    assert heat_apply(f, s, 0.7).is_hermitian()
    assert np.array_equal(enforce_hermitian(f).coeffs, f.coeffs)


@given(seed=seeds, decay=st.floats(0.1, 3.0), amp=st.floats(1e-3, 10.0))
def test_generator_contract(seed, decay, amp):
    lat = build_lattice(6)
    f = random_divfree_field(lat, decay, amp, seed)
    assert f.is_hermitian()
    assert divergence_residual(f) <= 1e-12 * amp
    assert np.all(f.magnitude() <= amp * np.exp(-decay * lat.kabs) * (1 + 1e-12))
    g = random_divfree_field(lat, decay, amp, seed)
    assert np.array_equal(f.coeffs, g.coeffs)


def test_generator_zero_amplitude(lat6):
    assert not np.any(random_divfree_field(lat6, 1.0, 0.0, 3).coeffs)


def test_generator_seeds_differ(lat6):
    assert not np.array_equal(random_divfree_field(lat6, 1.0, 1.0, 1).coeffs,
                              random_divfree_field(lat6, 1.0, 1.0, 2).coeffs)


def test_taylor_green_physical_values(lat8):
    from gevrey_ns.nonlinear import _to_physical
    u = taylor_green(lat8, 1.0)
    assert u.is_hermitian() and is_divergence_free(u)
    phys = _to_physical(u.coeffs, lat8)
    P = phys.shape[-1]
    x = 2 * np.pi * np.arange(P) / P
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    assert np.allclose(phys[0], np.sin(X) * np.cos(Y) * np.cos(Z), atol=1e-14)
    assert np.allclose(phys[1], -np.cos(X) * np.sin(Y) * np.cos(Z), atol=1e-14)
    assert np.allclose(phys[2], 0.0, atol=1e-14)


def test_single_mode(lat6):
    u = single_mode(lat6, 0.3)
    assert u.is_hermitian() and is_divergence_free(u)
    assert np.count_nonzero(u.magnitude()) == 2


def test_snapshot_round_trip(tmp_path, lat6):
    f = random_divfree_field(lat6, 0.5, 1.0, 42)
    path = tmp_path / "u.gnsf"
    write_snapshot(f, path)
    g = read_snapshot(path)
    assert g.lattice == lat6
    assert np.array_equal(f.coeffs, g.coeffs)
    lines = path.read_text().splitlines()
    assert lines[0] == "GNSF1 M=6 L=6.2831853071795862"
    assert len(lines) - 1 == 3 * lat6.size // 2


def test_snapshot_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.gnsf"
    bad.write_text("GNSF2 M=6 L=6.2831853071795862\n")
    with pytest.raises(ValueError):
        read_snapshot(bad)
    bad.write_text("GNSF1 M=6 L=6.2831853071795862\n-1 0 0 0 1.0 0.0\n")
    with pytest.raises(ValueError):
        read_snapshot(bad)


def test_field_arithmetic(lat4, lat6):
    f = single_mode(lat4, 1.0)
    assert np.array_equal((f + f).coeffs, (2 * f).coeffs)
    assert not np.any((f - f).coeffs)
    with pytest.raises(ValueError):
        f + single_mode(lat6, 1.0)
    with pytest.raises(ValueError):
        SpectralVectorField(lat4, np.zeros((3, 5, 5, 5)))
