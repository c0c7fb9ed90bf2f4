"""Tail curves lam * P(X^{1/2} > lam) and lam * P(X > lam), and the Laplace side.

All curve points of one sample set are nested indicators of the same draws,
so the standard error of any linear combination of curve values (plateau,
extrapolation intercept) is propagated with the exact multinomial covariance
rather than treating points as independent.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .accum import MeanAccumulator

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
MIN_SAMPLES = 100


class TailMode(str, Enum):
    SQRT_TAIL = "sqrt_tail"
    PLAIN_TAIL = "plain_tail"


class Verdict(str, Enum):
    CONSISTENT_WITH_D = "consistent_with_D"
    NOT_D = "not_D"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TailCurve:
    lambdas: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    counts: np.ndarray
    n_samples: int
    mode: TailMode

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.n_samples

    def covariance(self) -> np.ndarray:
        """Covariance of the values: cov(p_i, p_j) = (p_{max(i,j)} - p_i p_j) / N, scaled by lam_i lam_j."""
        p = self.probabilities
        order = np.argsort(self.lambdas)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        outer = np.maximum.outer(rank, rank)
        p_joint = p[order][outer]
        cov_p = (p_joint - np.outer(p, p)) / self.n_samples
        return cov_p * np.outer(self.lambdas, self.lambdas)

    def effective_std_errors(self) -> np.ndarray:
        """Binomial SE with p clipped to [1/N, 1 - 1/N]; keeps weights finite when a count is 0 or N."""
        n = self.n_samples
        p = np.clip(self.probabilities, 1.0 / n, 1.0 - 1.0 / n)
        return self.lambdas * np.sqrt(p * (1.0 - p) / n)

    def to_csv(self, path, header_comment: str | None = None):
        with open(path, "w", newline="") as fh:
            fh.write(f"# martlab tail curve v1{'; ' + header_comment if header_comment else ''}\n")
            fh.write("lambda,value,std_error,n,mode\n")
            for lam, v, se in zip(self.lambdas, self.values, self.std_errors):
                fh.write(f"{float(lam)!r},{float(v)!r},{float(se)!r},{self.n_samples},{self.mode.value}\n")


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def z(self, target: float) -> float:
        return (self.value - target) / self.se if self.se > 0 else (0.0 if self.value == target else math.inf)


@dataclass(frozen=True)
class TauberianReport:
    laplace_limit: Estimate
    tail_limit: Estimate
    ratio: Estimate
    mean_terminal: Estimate
    small_lambdas: tuple
    big_lambdas: tuple


def _clean(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample set")
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("samples must be nonnegative")
    if x.size < MIN_SAMPLES:
        warnings.warn(f"only {x.size} samples; tail estimates need N >= {MIN_SAMPLES}", stacklevel=3)
    return x


def empirical_tail_curve(samples, lambdas, mode=TailMode.SQRT_TAIL, cap: float | None = None) -> TailCurve:
    """lam_i * P(X^{1/2} > lam_i) (``sqrt_tail``) or lam_i * P(X > lam_i) (``plain_tail``) by exact counting.

    ``cap`` is the largest trustworthy threshold (sqrt of the horizon cap for
    quadratic variations of censored paths); lambdas at or above it are rejected.
    """
    mode = TailMode(mode)
    x = _clean(samples)
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0 or np.any(~(lam > 0)):
        raise ValueError("lambdas must be a nonempty set of positive reals")
    if cap is not None and np.any(lam >= cap):
        raise ValueError(f"lambdas must stay below the censoring cap {cap}")
    stat = np.sqrt(x) if mode is TailMode.SQRT_TAIL else x
    stat = np.sort(stat)
    counts = stat.size - np.searchsorted(stat, lam, side="right")
    n = stat.size
    p = counts / n
    return TailCurve(lambdas=lam, values=lam * p, std_errors=lam * np.sqrt(p * (1.0 - p) / n),
                     counts=counts.astype(np.int64), n_samples=n, mode=mode)


def sup_neg_tail_curve(samples, lambdas) -> TailCurve:
    return empirical_tail_curve(samples, lambdas, TailMode.PLAIN_TAIL)


def default_big_lambdas(samples, t_max: float, mode=TailMode.SQRT_TAIL, n_points: int = 12,
                        lo_factor: float = 5.0, hi_fraction: float = 0.3) -> np.ndarray:
    """Geometric grid from ``lo_factor`` times the median statistic to ``hi_fraction * sqrt(t_max)``."""
    mode = TailMode(mode)
    x = np.asarray(samples, dtype=float)
    stat = np.sqrt(x) if mode is TailMode.SQRT_TAIL else x
    positive = stat[stat > 0]
    base = float(np.median(positive)) if positive.size else 1.0
    lo, hi = lo_factor * base, hi_fraction * math.sqrt(t_max)
    if not lo < hi:
        raise ValueError(f"empty asymptotic window: lower end {lo:.4g} >= upper end {hi:.4g}")
    return np.geomspace(lo, hi, n_points)


def _combination(curve: TailCurve, coef: np.ndarray) -> Estimate:
    value = float(coef @ curve.values)
    var = float(coef @ curve.covariance() @ coef)
    return Estimate(value, math.sqrt(max(var, 0.0)))


def plateau(curve: TailCurve) -> Estimate:
    """Inverse-variance weighted mean of the curve values."""
    w = 1.0 / curve.effective_std_errors() ** 2
    return _combination(curve, w / w.sum())


def extrapolate_tail(curve: TailCurve) -> Estimate:
    """Intercept of a weighted least-squares fit ``value = c + d / lam``."""
    if curve.lambdas.size < 3:
        raise ValueError("extrapolation needs at least 3 lambdas")
    w = 1.0 / curve.effective_std_errors() ** 2
    X = np.column_stack([np.ones_like(curve.lambdas), 1.0 / curve.lambdas])
    A = np.linalg.solve(X.T @ (w[:, None] * X), (X * w[:, None]).T)
    return _combination(curve, A[0])


def laplace_side(samples, lam: float) -> Estimate:
    """(1/lam) * (1 - mean exp(-lam^2 X / 2)), with SE = SD(exp(-lam^2 X/2)) / (lam sqrt(N))."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    x = _clean(samples)
    f = np.exp(-0.5 * lam * lam * x)
    acc = MeanAccumulator.from_array(f)
    return Estimate((1.0 - acc.mean) / lam, acc.std_error / lam)


def laplace_censoring_bias(n_censored: int, n: int, lam: float, t_max_qv: float) -> float:
    """Upper bound on the bias contributed by censored samples at ``lam``."""
    return n_censored / n * math.exp(-0.5 * lam * lam * t_max_qv) / lam


def laplace_limit(samples, small_lambdas) -> Estimate:
    """Ordinary least squares of the Laplace-side values against lam; the intercept estimates the lam -> 0 limit.

    The intercept is a fixed linear combination of sample means, so its SE is
    the SD of the per-sample combination divided by sqrt(N).
    """
    lam = np.asarray(sorted(set(float(v) for v in small_lambdas)), dtype=float)
    if lam.size < 3:
        raise ValueError("extrapolation ill-conditioned: need at least 3 distinct small lambdas")
    if np.any(lam <= 0):
        raise ValueError("small lambdas must be positive")
    x = _clean(samples)
    X = np.column_stack([np.ones_like(lam), lam])
    c = np.linalg.solve(X.T @ X, X.T)[0]
    # intercept = sum_i c_i (1 - mean f_i) / lam_i = const - mean(g)
    g = np.zeros_like(x)
    for ci, li in zip(c, lam):
        g += ci / li * np.exp(-0.5 * li * li * x)
    const = float(np.sum(c / lam))
    acc = MeanAccumulator.from_array(g)
    return Estimate(const - acc.mean, acc.std_error)


def mean_terminal(m_inf, censored=None) -> Estimate:
    m = np.asarray(m_inf, dtype=float)
    if censored is not None:
        m = m[~np.asarray(censored, dtype=bool)]
    if m.size == 0:
        raise ValueError("no uncensored samples")
    acc = MeanAccumulator.from_array(m)
    return Estimate(acc.mean, acc.std_error)


def _ratio(num: Estimate, den: Estimate) -> Estimate:
    if den.value == 0:
        return Estimate(math.nan, math.nan)
    r = num.value / den.value
    rel = math.hypot(num.se / num.value if num.value else 0.0, den.se / den.value)
    return Estimate(r, abs(r) * rel if num.value else den.se / abs(den.value))


def tauberian_compare(samples, small_lambdas, big_lambdas, m_inf=None, censored=None,
                      cap: float | None = None) -> TauberianReport:
    """Both sides of the Tauberian relation for the nonnegative variable ``samples``.

    ``laplace_limit`` extrapolates (1/lam)(1 - E exp(-lam^2 X/2)) to lam -> 0;
    ``tail_limit`` is the plateau of lam P(X^{1/2} > lam) over ``big_lambdas``;
    ``ratio = tail_limit / (sqrt(2/pi) laplace_limit)``.
    """
    if len(small_lambdas) == 0 or len(big_lambdas) == 0:
        raise ValueError("lambda grids must be nonempty")
    lap = laplace_limit(samples, small_lambdas)
    curve = empirical_tail_curve(samples, big_lambdas, TailMode.SQRT_TAIL, cap=cap)
    tail = plateau(curve)
    ratio = _ratio(tail, Estimate(SQRT_2_OVER_PI * lap.value, SQRT_2_OVER_PI * lap.se))
    mean = mean_terminal(m_inf, censored) if m_inf is not None else Estimate(math.nan, math.nan)
    return TauberianReport(laplace_limit=lap, tail_limit=tail, ratio=ratio, mean_terminal=mean,
                           small_lambdas=tuple(float(v) for v in small_lambdas),
                           big_lambdas=tuple(float(v) for v in big_lambdas))


def _last_third(curve: TailCurve) -> TailCurve:
    order = np.argsort(curve.lambdas)
    k = max(1, int(math.ceil(order.size / 3)))
    idx = order[-k:]
    return TailCurve(curve.lambdas[idx], curve.values[idx], curve.std_errors[idx], curve.counts[idx],
                     curve.n_samples, curve.mode)


def class_d_diagnostic(curves, n_sigma: float = 3.0) -> Verdict:
    """Uniform-integrability verdict from the three tail curves of one run.

    Each curve's last third (largest lambdas) is reduced to a weighted mean m
    with SE s.  All m < n_sigma*s: consistent with class D.  Any m > n_sigma*s:
    not class D.  Curves with fewer than 3 points give no trend: inconclusive.
    """
    curves = list(curves)
    if not curves or any(c.lambdas.size < 3 for c in curves):
        return Verdict.INCONCLUSIVE
    tails = [plateau(_last_third(c)) for c in curves]
    # a zero count has zero binomial SE; floor at one-count resolution
    floors = [max(t.se, float(np.max(c.lambdas)) / c.n_samples) for t, c in zip(tails, curves)]
    if all(t.value < n_sigma * s for t, s in zip(tails, floors)):
        return Verdict.CONSISTENT_WITH_D
    if any(t.value > n_sigma * s for t, s in zip(tails, floors)):
        return Verdict.NOT_D
    return Verdict.INCONCLUSIVE
