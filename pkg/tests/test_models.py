import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from martlab import models as M
from martlab.rng import Seed

A = M.stopped_brownian_upper(a=1.0)
B = M.stopped_brownian_two_sided(a=1.0, b=2.0)
C = M.compensated_poisson_upper(a=1.0, rho=1.0)
D = M.jump_diffusion_two_sided(sigma=1.0, rho=2.0, K=1.0, a=1.0, b=1.0)
E = M.random_walk_atoms_upper(a=1)


def gauss_cdf(x):
    return float(mp.ncdf(x))


# ---- model specs -------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(kind="StoppedBrownianUpper", sigma=1.0, jump_bound=1.0),
    dict(kind="StoppedBrownianUpper", sigma=0.0),
    dict(kind="StoppedBrownianUpper", sigma=1.0, barrier_down=1.0),
    dict(kind="StoppedBrownianTwoSided", sigma=1.0),
    dict(kind="CompensatedPoissonUpper", jump_rate=1.0, jump_bound=2.0),
    dict(kind="RandomWalkAtomsUpper", jump_bound=1.0, barrier_up=1.5),
    dict(kind="JumpDiffusionTwoSided", jump_bound=1.0, barrier_down=1.0),
    dict(kind="JumpDiffusionTwoSided", sigma=-1.0, jump_bound=1.0, barrier_down=1.0),
    dict(kind="StoppedBrownianUpper", sigma=1.0, horizon_cap=0.0),
])
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        M.ModelSpec(**kwargs)


def test_continuity_matches_jump_bound():
    for m in (A, B, C, D, E):
        assert m.is_continuous == (m.jump_bound == 0)


# ---- analytic oracles --------------------------------------------------------

def test_oracle_qv_tail_lambda_10():
    expected = 10 * (2 * gauss_cdf(0.1) - 1)
    assert math.isclose(10 * M.analytic_oracle(A, "qv_tail", 10.0), expected, rel_tol=1e-12)
    assert round(expected, 4) == 0.7966


def test_oracle_supneg_and_laplace():
    assert math.isclose(99 * M.analytic_oracle(A, "supneg_tail", 99.0), 0.99)
    assert math.isclose(M.analytic_oracle(A, "laplace", 0.1), float(mp.exp(-0.1)), rel_tol=1e-14)
    assert round(M.analytic_oracle(A, "laplace", 0.1), 6) == 0.904837
    assert M.analytic_oracle(A, "mean_terminal") == 1.0


def test_oracle_unavailable_for_jump_models():
    for m in (C, D, E):
        for q in ("qv_tail", "supneg_tail", "laplace"):
            assert M.analytic_oracle(m, q, 1.0) is M.UNAVAILABLE
        assert M.analytic_oracle(m, "mean_terminal") is M.UNAVAILABLE


def test_oracle_model_b():
    assert M.analytic_oracle(B, "mean_terminal") == 0.0
    assert M.analytic_oracle(B, "supneg_tail", 2.5) == 0.0
    assert M.analytic_oracle(B, "supneg_tail", 1.0) is M.UNAVAILABLE


def test_oracle_rejects_bad_queries():
    with pytest.raises(ValueError):
        M.analytic_oracle(A, "qv_tail", 0.0)
    with pytest.raises(ValueError):
        M.analytic_oracle(A, "median")


# ---- terminal sampling -------------------------------------------------------

def test_model_a_terminal_value_is_barrier():
    b = M.sample_terminals(A, 1, 10_000)
    assert np.all(b.m_inf[~b.censored] == 1.0)
    assert np.array_equal(b.qv_pred, b.qv_opt)


def test_model_a_ks_against_exact_cdf():
    n = 200_000
    b = M.sample_terminals(A, 11, n)
    x = np.sort(b.qv_pred)
    # P(tau <= t) = 2(1 - Phi(a/sqrt t)) = erfc(a / sqrt(2t))
    cdf = np.array([math.erfc(1.0 / math.sqrt(2 * t)) for t in x])
    i = np.arange(1, n + 1)
    d = max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n))
    assert d < 1.63 / math.sqrt(n)


def test_model_a_supneg_law():
    b = M.sample_terminals(A, 12, 200_000)
    for lam in (0.5, 2.0, 9.0):
        p = np.mean(b.sup_neg > lam)
        exact = 1 / (1 + lam)
        assert abs(p - exact) < 4 * math.sqrt(exact * (1 - exact) / len(b))


def test_model_e_terminal_is_barrier_and_integral():
    m = M.random_walk_atoms_upper(a=2)
    b = M.sample_terminals(m, 3, 20_000)
    ok = ~b.censored
    assert np.all(b.m_inf[ok] == 2.0)
    assert np.array_equal(b.qv_pred, b.qv_opt)
    assert np.all(b.qv_pred == np.floor(b.qv_pred))


def test_model_c_integral_qv_and_exact_predictable_qv():
    b = M.sample_terminals(C, 4, 20_000)
    assert np.all(b.qv_opt == np.floor(b.qv_opt)) and np.all(b.qv_opt >= 1)
    assert np.array_equal(b.qv_pred, C.jump_rate * b.stop_time)
    assert np.all(b.m_inf[~b.censored] >= 1.0) and np.all(b.m_inf[~b.censored] < 2.0)


@pytest.mark.parametrize("model", [B, D])
def test_two_sided_paths_stay_bounded(model):
    lo, hi = -model.barrier_down - model.jump_bound, model.barrier_up + model.jump_bound
    b = M.sample_terminals(model, 5, 5_000, step=1e-3)
    assert np.all((b.m_inf >= lo) & (b.m_inf <= hi))
    for i in range(20):
        p = M.generate_path(model, Seed(5, i), 1e-3)
        assert np.all((p.values >= lo) & (p.values <= hi))
        assert np.all(np.abs(p.jump_sizes) <= model.jump_bound)


@pytest.mark.parametrize("model", [B, C, D, E])
def test_path_mode_agrees_with_terminal_mode(model):
    for i in range(10):
        seed = Seed(21, i)
        s = M.sample_terminal(model, seed, 1e-3)
        p = M.generate_path(model, seed, 1e-3)
        assert p.values[-1] == pytest.approx(s.m_inf, abs=1e-9)
        assert p.end_time == pytest.approx(s.stop_time, abs=1e-12)
        assert p.jump_sizes.size == s.n_jumps


@pytest.mark.parametrize("model", [C, D])
def test_values_reconstruct_from_parts(model):
    for i in range(10):
        p = M.generate_path(model, Seed(8, i), 1e-2 if model is D else 1e-3)
        jumps = np.array([p.jump_sizes[p.jump_times <= t].sum() for t in p.times])
        rebuilt = p.cont_values + jumps - model.compensator_drift * p.times
        assert np.allclose(rebuilt, p.values, atol=1e-12 * max(1, p.times.size))


def test_model_e_path_is_integer_lattice():
    for i in range(10):
        p = M.generate_path(E, Seed(9, i))
        assert np.all(p.values == np.round(p.values))
        assert np.all(p.jump_times == np.round(p.jump_times))
        assert set(np.abs(p.jump_sizes).tolist()) <= {1.0}


def test_model_d_jump_count_poisson_mean():
    m = M.jump_diffusion_two_sided(a=100.0, b=100.0, horizon_cap=3.0)
    b = M.sample_terminals(m, 13, 100_000, step=1e-2)
    n = b.n_jumps.astype(float)
    assert abs(n.mean() - 6.0) < 3 * n.std() / math.sqrt(n.size)


def test_model_a_path_mode_realized_qv_error():
    m = M.stopped_brownian_upper(a=100.0, horizon_cap=1.0)
    err = []
    for i in range(1000):
        p = M.generate_path(m, Seed(14, i), 1e-3)
        err.append(np.sum(np.diff(p.cont_values) ** 2) - p.end_time)
    rms = math.sqrt(np.mean(np.square(err)))
    assert rms == pytest.approx(math.sqrt(2e-3), rel=0.1)


def test_censoring_is_recorded():
    m = E.with_params(horizon_cap=10.0)
    b = M.sample_terminals(m, 15, 10_000)
    assert b.censored.any()
    assert np.all(b.qv_pred[b.censored] == 10.0)
    assert b.censored_fraction == pytest.approx(b.censored.mean())


@pytest.mark.parametrize("model", [A, C, E])
def test_censoring_keeps_low_tail_indicators_exact(model):
    capped = model.with_params(horizon_cap=100.0)
    full = M.sample_terminals(model, 16, 20_000)
    cut = M.sample_terminals(capped, 16, 20_000)
    for lam in (1.0, 5.0, 9.9):
        assert np.array_equal(np.sqrt(full.qv_pred) > lam, np.sqrt(cut.qv_pred) > lam)


@pytest.mark.parametrize("h", [0.0, -1.0, math.nan, 2e6])
def test_bad_step_rejected(h):
    with pytest.raises(ValueError):
        M.generate_path(B, Seed(0, 0), h)


def test_step_too_coarse_for_barriers():
    with pytest.raises(ValueError, match="too large"):
        M.sample_terminals(M.stopped_brownian_two_sided(a=0.1, b=0.1), 0, 10, step=0.1)


@settings(max_examples=25)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**40))
def test_sample_terminal_is_pure(master, index):
    s1 = M.sample_terminal(A, Seed(master, index))
    s2 = M.sample_terminal(A, Seed(master, index))
    assert s1 == s2
    batch = M.sample_terminals(A, master, 3, start=index)
    assert batch[0] == s1


def test_results_independent_of_threads():
    n = 3 * M.CHUNK + 17
    one = M.simulate_rows(C, 99, n, threads=1)
    four = M.simulate_rows(C, 99, n, threads=4)
    assert np.array_equal(one, four)


def test_batch_offsets_compose():
    whole = M.sample_terminals(D, 3, 200, step=1e-2)
    tail = M.sample_terminals(D, 3, 100, start=100, step=1e-2)
    assert np.array_equal(whole.m_inf[100:], tail.m_inf)
