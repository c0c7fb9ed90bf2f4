import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from martlab import models as M

mp.mp.dps = 50
from martlab.models import PathRecord
from martlab.rng import Seed
from martlab.stochexp import (cumulant, density, log1p_minus, phi, sandwich_bounds, sinhc_minus_one,
                              stochastic_exponential)

A = M.stopped_brownian_upper()
C = M.compensated_poisson_upper()
D = M.jump_diffusion_two_sided(sigma=1.0, rho=2.0, K=1.0)
E = M.random_walk_atoms_upper(a=5)


def _path(model, times, values, jt=(), js=()):
    times = np.asarray(times, float)
    return PathRecord(times, np.asarray(values, float), np.zeros_like(times), np.asarray(jt, float),
                      np.asarray(js, float), float(times[-1]), model)


def test_model_d_cumulant_closed_form():
    g = cumulant(D, 1.0, 3.0)
    assert g.continuous_part == pytest.approx(float(6 * (mp.sinh(1) - 1)), rel=1e-13)
    assert round(g.continuous_part, 5) == 1.05121
    assert g.atoms == []


@pytest.mark.parametrize("model", [A, M.stopped_brownian_two_sided(), C, D, E])
def test_zero_lambda_zero_cumulant(model):
    assert cumulant(model, 0.0, 4.0).total == 0.0


def test_model_d_small_lambda_matches_jump_qv():
    lam = 1e-3
    g = cumulant(D, lam, 3.0)
    assert g.continuous_part / (lam**2 / 2 * 2 * 3 / 3) == pytest.approx(1.0, abs=1e-4)


def test_model_c_cumulant():
    assert cumulant(C, 0.5, 2.0).total == pytest.approx(float(2 * (mp.exp(0.5) - 1.5)), rel=1e-13)


def test_model_e_atoms():
    g = cumulant(E, 0.7, 3.5)
    assert [t for t, _ in g.atoms] == [1.0, 2.0, 3.0]
    assert all(v == pytest.approx(float(mp.cosh(0.7) - 1)) and v >= 0 for _, v in g.atoms)
    assert g.continuous_part == 0.0


def test_lambda_outside_margin_rejected():
    with pytest.raises(ValueError):
        cumulant(D, 1.5, 1.0)
    with pytest.raises(ValueError):
        stochastic_exponential(_path(A, [0, 1], [0, 0.5]), A, 2.0)


def test_model_a_log_exponential():
    p = _path(A, [0.0, 0.4, 1.3], [0.0, 0.2, -0.1])
    assert stochastic_exponential(p, A, 0.6) == pytest.approx(0.36 * 1.3 / 2)


def test_model_e_exponential_is_cosh_power():
    p = _path(E, [0, 1, 2, 3], [0, 1, 0, 1], jt=[1, 2, 3], js=[1, -1, 1])
    assert math.exp(stochastic_exponential(p, E, 1.0)) == pytest.approx(float(mp.cosh(1) ** 3), rel=1e-13)
    assert round(math.exp(stochastic_exponential(p, E, 1.0)), 5) == 3.67423
    assert density(p, E, 1.0) == pytest.approx(float(mp.e / mp.cosh(1) ** 3), rel=1e-13)
    assert round(density(p, E, 1.0), 5) == 0.73982


def test_model_a_density():
    p = _path(A, [0.0, 0.5, 1.0], [0.0, 0.3, 1.0])
    assert density(p, A, 1.0) == pytest.approx(float(mp.exp(0.5)), rel=1e-14)
    assert round(density(p, A, 1.0), 5) == 1.64872


@pytest.mark.parametrize("model", [A, C, D, E])
def test_zero_lambda_trivial(model):
    p = M.generate_path(model, Seed(1, 0), 1e-2)
    assert stochastic_exponential(p, model, 0.0) == 0.0
    assert density(p, model, 0.0) == 1.0


def test_sandwich_example_values():
    s = sandwich_bounds(0.1, 1.0, 10.0)
    ph = 1 - 0.1 * mp.exp(0.1)
    assert s.upper == pytest.approx(float(0.05 * (1 + 0.1 / 3 * mp.exp(0.1))), rel=1e-13)
    assert s.lower == pytest.approx(float(0.05 * (ph - 0.00125 * ph**2)), rel=1e-13)
    assert round(s.upper, 7) == 0.0518420 and round(s.lower, 7) == 0.0444247
    assert s.valid


def test_sandwich_continuous_collapse():
    s = sandwich_bounds(0.3, 0.0, 7.0)
    assert s.lower == s.upper == pytest.approx(0.045 * 7.0)


def test_sandwich_invalid_for_large_lambda():
    assert phi(2.0, 1.0) < 0
    assert not sandwich_bounds(2.0, 1.0, 1.0).valid
    with pytest.raises(ValueError):
        sandwich_bounds(0.0, 1.0, 1.0)


@given(st.floats(1e-4, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 1e6))
def test_sandwich_ordered_when_valid(lam, K, qv):
    s = sandwich_bounds(lam, K, qv)
    if s.valid:
        assert s.lower <= s.upper


@given(st.floats(1e-3, 0.5), st.floats(0.0, 1e4))
def test_pathwise_sandwich_for_model_d(lam, t):
    # log E for model D depends on the path only through its end time
    log_e = 0.5 * lam**2 * t + cumulant(D, lam, t).total
    s = sandwich_bounds(lam, 1.0, t + 2 * t / 3)
    if s.valid:
        assert s.lower <= log_e * (1 + 1e-12) and log_e <= s.upper * (1 + 1e-12)


@given(st.floats(1e-12, 10.0))
@example(1e-4)
@example(9.99e-5)
@example(1e-2)
@example(9.99e-3)
def test_log1p_minus_accurate(dg):
    exact = float(mp.log1p(mp.mpf(dg)) - mp.mpf(dg))
    assert log1p_minus(dg) == pytest.approx(exact, rel=1e-12, abs=1e-300)
    assert 1 + dg > 1 - 1e-15


@given(st.floats(-5.0, 5.0))
@example(1e-3)
@example(0.1)
@example(0.0999)
@example(-0.1)
def test_sinhc_minus_one_accurate(x):
    digits = 60 + (int(-2 * math.log10(abs(x))) if 0 < abs(x) < 1 else 0)
    with mp.workdps(digits):
        exact = float(mp.sinh(x) / x - 1) if x != 0 else 0.0
    assert sinhc_minus_one(x) == pytest.approx(exact, rel=1e-12, abs=1e-300)
