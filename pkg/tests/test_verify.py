import json
import math

import numpy as np
import pytest

from gevrey_ns.evolve import march
from gevrey_ns.fixedpoint import Trajectory, choose_parameters
from gevrey_ns.lattice import SpectralVectorField, build_lattice, random_divfree_field, single_mode, taylor_green
from gevrey_ns.norms import GevreyParams, lemma4_constant, z_norm
from gevrey_ns.verify import (
    MarginReport,
    check_lemma1,
    check_lemma23,
    check_lemma23_random,
    check_lemma4,
    cross_validate,
    lemma4_chain_constant,
    random_ball_element,
)

P = GevreyParams(-1, 1.0, 2.0)


def test_report_bookkeeping():
    rep = MarginReport("demo", slack=0.1)
    rep.add(0.5, {"i": 0})
    rep.add(1.05, {"i": 1})
    assert rep.passed and rep.worst_sample["i"] == 1 and not rep.failing
    rep.add(1.2, {"i": 2})
    assert not rep.passed and rep.failing[0]["i"] == 2
    assert json.loads(rep.to_json())["passed"] is False


def test_lemma1_small_run(lat6):
    rep = check_lemma1(50, lat6, seed=7)
    assert rep.passed and rep.samples == 50 and rep.skipped == 0
    assert 0 < rep.worst_ratio < 1


def test_lemma1_bit_reproducible(lat6):
    assert check_lemma1(20, lat6, seed=3).worst_ratio == check_lemma1(20, lat6, seed=3).worst_ratio


def test_lemma1_direct_method_agrees(lat6):
    fast = check_lemma1(5, lat6, seed=1)
    direct = check_lemma1(5, lat6, seed=1, method="direct")
    assert fast.worst_ratio == pytest.approx(direct.worst_ratio, rel=1e-12)


def test_lemma1_rejects_zero_samples(lat6):
    with pytest.raises(ValueError):
        check_lemma1(0, lat6, seed=0)


@pytest.mark.parametrize("a, sigma", [(0.5, 2.0), (1.0, 2.0), (0.5, 4.0), (1.0, 4.0)])
def test_lemma4_small_run(lat6, a, sigma):
    rep = check_lemma4(30, lat6, a, sigma, seed=2)
    assert rep.passed and rep.samples == 30
    steps = rep.details["steps"]
    assert all(v <= 1 + 1e-12 for v in steps.values())


def test_lemma4_chain_constant():
    assert lemma4_chain_constant(1.0, 4.0) == 2 * lemma4_constant(1.0, 4.0)


def test_lemma4_single_mode_closed_form(lat6):
    # u = (0, 2 cos x, 0): u⊗u has only the (1,1) entry, cos^2 x = (1 + cos 2x)/2
    a, sigma = 1.0, 2.0
    rep = check_lemma4(1, lat6, a, sigma, seed=0)
    assert rep.passed
    u = single_mode(lat6, 1.0)
    from gevrey_ns.nonlinear import tensor_product
    lhs = z_norm(tensor_product(u, u), GevreyParams(0, a, sigma))
    assert lhs == pytest.approx(2 * math.exp(a * 2 ** (1 / sigma)), rel=1e-14)
    zm1 = 2 * math.exp(a)
    rhs = 2 * lemma4_constant(a, sigma) * 2 * math.exp(a / math.sqrt(sigma)) * math.sqrt(zm1 * zm1)
    assert lhs / rhs < 1


def test_lemma23_zero_and_heat(lat6, rfield):
    times = np.linspace(0, 0.2, 11)
    r2, r3 = check_lemma23(Trajectory.zeros(lat6, times), 1.0)
    assert r2.skipped == 1 and r3.skipped == 1 and r2.passed
    r2, r3 = check_lemma23(march(single_mode(lat6, 0.2), 0.02, 10, 1.0), 1.0)
    assert r2.details["lhs"] == 0.0 and r3.details["lhs"] == 0.0


def test_lemma23_nonlinear(lat6):
    u0 = random_divfree_field(lat6, 0.7, 1.0, 5)
    u0 = u0 * (0.3 / z_norm(u0, P))
    r2, r3 = check_lemma23(march(u0, 0.01, 30, 1.0), 1.0)
    assert r2.worst_ratio < 1.05 and r3.worst_ratio < 1.05
    a2, a3 = check_lemma23_random(5, lat6, seed=4)
    assert a2.passed and a3.passed and a2.samples == 5


def test_cross_validate_zero(lat6):
    assert cross_validate(SpectralVectorField.zeros(lat6), 1.0, P, 0.01) == 0.0


def test_cross_validate_pure_heat(lat6):
    # the shear mode has no nonlinearity, so both routes reduce to the heat flow
    u0 = single_mode(lat6, 0.01)
    assert cross_validate(u0, 1.0, P, 0.01) <= 1e-12 * z_norm(u0, P)


def test_cross_validate_taylor_green(lat6):
    u0 = taylor_green(lat6)
    u0 = u0 * (0.05 / z_norm(u0, P))
    dt = 0.01
    assert cross_validate(u0, 1.0, P, dt) <= max(1e-6, 50 * dt**2) * 0.05


def test_random_ball_element(lat6):
    rng = np.random.default_rng(0)
    times = np.linspace(0, 0.5, 21)
    w = random_ball_element(lat6, times, 0.05, P, rng, fill=0.5)
    assert max(w.linf(P), w.l1(P)) == pytest.approx(0.025, rel=1e-12)
    assert w.field(3).is_hermitian()
