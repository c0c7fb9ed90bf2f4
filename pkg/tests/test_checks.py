import math

import numpy as np
import pytest

from martlab import checks as chk
from martlab import models as M
from martlab.stochexp import SandwichBound

A = M.stopped_brownian_upper()
C = M.compensated_poisson_upper()
D = M.jump_diffusion_two_sided(sigma=1.0, rho=2.0, K=1.0)
E1 = M.random_walk_atoms_upper(1)
E2 = M.random_walk_atoms_upper(2)


def test_mean_one_lambda_zero_exact():
    r = chk.mean_one_density_check(D, 0.0, n_paths=1000, seed=1, step=1e-2)
    assert r.mean == 1.0 and r.z_score == 0.0 and r.passed


def test_mean_one_model_e():
    r = chk.mean_one_density_check(E2, 0.5, n_paths=50_000, seed=2)
    assert r.passed and r.n_paths == 50_000


def test_mean_one_model_d():
    r = chk.mean_one_density_check(D, 0.1, n_paths=20_000, seed=3, step=1e-2)
    assert r.passed


@pytest.mark.parametrize("model", [A, M.stopped_brownian_two_sided(), C, D, E1])
def test_density_mean_at_most_one(model):
    b = M.sample_terminals(model, 4, 20_000, step=2e-3)
    r = chk.mean_one_density_check(model, 0.5, batch=b)
    assert r.mean <= 1 + 3 * r.se


def test_batch_model_mismatch_rejected():
    b = M.sample_terminals(A, 0, 100)
    with pytest.raises(ValueError):
        chk.mean_one_density_check(C, 0.1, batch=b)


def test_bdg_rejects_continuous_models():
    with pytest.raises(ValueError):
        chk.bdg_ratio_check(A, 10.0)


def test_bdg_model_e_is_zero_and_stable():
    s = chk.bdg_sweep(E1, n_paths=5_000, seed=5)
    assert s.finite and np.all(s.ratios == 0) and s.variation == 0.0


def test_bdg_model_d_baseline():
    p = chk.bdg_ratio_check(D, 10.0, n_paths=5_000, seed=6, step=1e-2)
    assert 0 < p.ratio <= 10 and math.isfinite(p.se)


def test_bracket_identity_model_c():
    assert chk.bracket_identity_check(C, 10.0, n_paths=2_000, seed=7)


@pytest.mark.parametrize("model,lams", [(D, (0.1, 0.05)), (E1, (0.1,)), (C, (0.05, 0.1))])
def test_sandwich_holds(model, lams):
    s = chk.sandwich_check(model, lams, n_paths=10_000, seed=8, step=1e-2)
    assert s.fraction == 1.0 and s.n_pairs == 10_000 * len(lams) and not s.violations


def test_sandwich_model_a_collapses():
    s = chk.sandwich_check(A, (0.5, 0.1, 0.02), n_paths=10_000, seed=9)
    assert s.fraction == 1.0 or s.max_relative_gap <= 1e-12
    assert s.max_relative_gap <= 1e-12


def test_sandwich_skips_invalid_lambdas():
    s = chk.sandwich_check(D, (0.1, 1.0), n_paths=100, seed=10, step=1e-2)
    assert s.lambdas == (0.1,) and s.skipped_lambdas == (1.0,)


def test_sandwich_violation_dumps_path(monkeypatch):
    def too_tight(lam, K, qv):
        base = 0.5 * lam * lam * np.asarray(qv)
        return SandwichBound(lower=base * 2, upper=base * 3, lam=lam, K=K, qv_pred=qv, valid=True)

    monkeypatch.setattr(chk, "sandwich_bounds", too_tight)
    s = chk.sandwich_check(D, (0.1,), n_paths=50, seed=11, step=1e-2, max_dump=3)
    assert s.fraction < 1.0 and len(s.violations) == 3
    v = s.violations[0]
    assert v["path"].values[-1] == pytest.approx(v["sample"].m_inf)


def test_zeta_model_a_zero():
    z = chk.theorem2_condition_check(A, (0.5, 0.1, 0.02), n_paths=5_000, seed=12)
    assert z.zeta1_max == pytest.approx(0, abs=1e-9) and z.zeta2_max == pytest.approx(0, abs=1e-9)


def test_zeta_model_d_bounded():
    z = chk.theorem2_condition_check(D, (0.1,), n_paths=5_000, seed=13, step=1e-2)
    assert z.zeta2_max <= math.exp(0.1) / 3 + 1e-12


def test_zeta_model_e_finite():
    z = chk.theorem2_condition_check(E1, (0.5, 0.2, 0.1, 0.05, 0.02), n_paths=10_000, seed=14)
    assert all(math.isfinite(v) for v in (z.zeta1_mean, z.zeta1_max, z.zeta2_mean, z.zeta2_max))
    assert z.n_used == 10_000 and z.n_excluded == 0
