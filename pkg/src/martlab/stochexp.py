"""Cumulant process, stochastic exponential and the exponential density.

For the catalog models the compensator is known in closed form, so

    G_t(lam) = int_0^t int (e^{lam z} - 1 - lam z) nu(ds, dz)

splits into a continuous part (models C, D) and atoms at integer times
(model E, where each atom contributes cosh(lam) - 1).  Then

    log E_t(lam) = lam^2/2 <M^c>_t + G_t(lam) + sum_atoms [log(1 + dG) - dG]
    z_t(lam)     = exp(lam M_t - log E_t(lam)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import ModelKind, ModelSpec, PathRecord
from .quadvar import atom_count

DEFAULT_SMALL_LAMBDAS = (0.5, 0.2, 0.1, 0.05, 0.02)


@dataclass(frozen=True)
class CumulantValue:
    lam: float
    continuous_part: float
    atom_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_values: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def atoms(self):
        return list(zip(self.atom_times.tolist(), self.atom_values.tolist()))

    @property
    def total(self) -> float:
        return self.continuous_part + math.fsum(self.atom_values.tolist())


@dataclass(frozen=True)
class SandwichBound:
    lower: float
    upper: float
    lam: float
    K: float
    qv_pred: float
    valid: bool


def _check_lambda(model: ModelSpec, lam: float):
    if not math.isfinite(lam) or abs(lam) > model.epsilon:
        raise ValueError(f"|lambda|={abs(lam)} outside the model's exponential-moment margin epsilon={model.epsilon}")


def sinhc_minus_one(x):
    """sinh(x)/x - 1, accurate near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, 1.0, x)
    big = np.sinh(xs) / xs - 1.0
    x2 = x * x
    # truncation error below 2e-16 relative for |x| < 0.1
    series = x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0)))
    out = np.where(small, series, big)
    return float(out) if out.ndim == 0 else out


def exp_minus_one_minus_x(x: float) -> float:
    """e^x - 1 - x without cancellation for small x."""
    if abs(x) < 1e-3:
        return x * x / 2.0 * (1.0 + x / 3.0 * (1.0 + x / 4.0 * (1.0 + x / 5.0)))
    return math.expm1(x) - x


def cosh_minus_one(x: float) -> float:
    return 2.0 * math.sinh(x / 2.0) ** 2


def log1p_minus(dg):
    """log(1 + dG) - dG, by its alternating series below 1e-2 where the direct form cancels."""
    dg = np.asarray(dg, dtype=float)
    small = dg < 1e-2
    series = np.zeros_like(dg)
    for k in range(8, 1, -1):
        series = dg * ((-1.0) ** (k + 1) / k + series)
    series = dg * series
    direct = np.log1p(np.where(small, 0.0, dg)) - dg
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def cumulant_rate(model: ModelSpec, lam: float) -> float:
    """d/dt of the continuous part of G for quasi-left-continuous models."""
    k = model.kind
    if k is ModelKind.COMPENSATED_POISSON_UPPER:
        return model.jump_rate * exp_minus_one_minus_x(lam)
    if k is ModelKind.JUMP_DIFFUSION_TWO_SIDED:
        return model.jump_rate * sinhc_minus_one(lam * model.jump_bound)
    return 0.0


def atom_jump(model: ModelSpec, lam: float) -> float:
    """Size dG of every compensator atom (model E only)."""
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        return cosh_minus_one(lam)
    return 0.0


def cumulant(model: ModelSpec, lam: float, t: float) -> CumulantValue:
    _check_lambda(model, lam)
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        n = atom_count(model, t)
        times = np.arange(1, n + 1, dtype=float)
        return CumulantValue(lam, 0.0, times, np.full(n, atom_jump(model, lam)))
    return CumulantValue(lam, cumulant_rate(model, lam) * t)


def log_stochastic_exponential_terminal(model: ModelSpec, lam: float, end_time, n_atoms=None):
    """Vectorized log E at the end of each path, given its end time (and atom count for E)."""
    _check_lambda(model, lam)
    end_time = np.asarray(end_time, dtype=float)
    half = 0.5 * lam * lam
    out = half * (model.sigma**2 * end_time) + cumulant_rate(model, lam) * end_time
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        n = np.floor(end_time) if n_atoms is None else np.asarray(n_atoms, dtype=float)
        dg = atom_jump(model, lam)
        out = out + n * dg + n * log1p_minus(dg)
    return out


def stochastic_exponential(path: PathRecord, model: ModelSpec, lam: float) -> float:
    """Terminal ``log E(lam)`` along ``path`` (the exponential itself can overflow)."""
    _check_lambda(model, lam)
    t = path.end_time
    g = cumulant(model, lam, t)
    cont = 0.5 * lam * lam * (model.sigma**2 * t)
    corr = math.fsum(np.atleast_1d(log1p_minus(g.atom_values)).tolist()) if g.atom_values.size else 0.0
    return cont + g.total + corr


def density(path: PathRecord, model: ModelSpec, lam: float) -> float:
    """Terminal value of the positive local martingale exp(lam M - log E)."""
    return math.exp(lam * float(path.values[-1]) - stochastic_exponential(path, model, lam))


def log_density_terminal(model: ModelSpec, lam: float, m_terminal, end_time, n_atoms=None):
    log_e = log_stochastic_exponential_terminal(model, lam, end_time, n_atoms)
    return lam * np.asarray(m_terminal, dtype=float) - log_e


def density_terminal(model: ModelSpec, lam: float, m_terminal, end_time, n_atoms=None):
    """Vectorized terminal density; may underflow to 0.0 for very long paths."""
    return np.exp(log_density_terminal(model, lam, m_terminal, end_time, n_atoms))


def phi(lam: float, K: float) -> float:
    return 1.0 - lam * K * math.exp(lam * K)


def sandwich_bounds(lam: float, K: float, qv_pred):
    """Explicit lower/upper bounds on log E(lam) in terms of <M>, jump bound K and lam.

    ``qv_pred`` may be an array; ``lower``/``upper`` then are arrays too.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    base = 0.5 * lam * lam * np.asarray(qv_pred, dtype=float)
    p = phi(lam, K)
    up_factor = 1.0 + lam / 3.0 * K * math.exp(lam * K)
    low_factor = p - lam * lam / 8.0 * K * K * p * p
    valid = p > 0 and low_factor > 0
    upper, lower = base * up_factor, base * low_factor
    if np.ndim(upper) == 0:
        upper, lower = float(upper), float(lower)
    return SandwichBound(lower=lower, upper=upper, lam=lam, K=K, qv_pred=qv_pred, valid=valid)
