"""Monte Carlo checks of the statements the tail limits rest on.

* mean-one density: E z_stop(lam) = 1 at the (capped) stopping time
* discrepancy bound: E sup_{s<=t} L_s^2 against K^2 E <M>_t over a horizon sweep
* sandwich: the explicit lower/upper bounds on log E(lam), pathwise
* two-sided envelopes zeta_1, zeta_2 of log E(lam) / (lam^2/2 <M>)

Every check accepts an already simulated :class:`TerminalBatch` or simulates
one from ``(model, n_paths, seed)``.  The density is evaluated at the capped
stopping time ``tau ^ T_max``; since M is frozen after stopping this is the
terminal value for stopped paths and optional stopping keeps the mean at one
for censored ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .accum import MeanAccumulator
from .models import DEFAULT_STEP, ModelKind, ModelSpec, TerminalBatch, generate_path, sample_terminals
from .quadvar import discrepancy_bracket
from .rng import Seed
from .stochexp import log_density_terminal, log_stochastic_exponential_terminal, sandwich_bounds


class InvariantViolation(RuntimeError):
    """A deterministic inequality failed on simulated data."""


def _batch(model, n_paths, seed, step, threads, batch):
    if batch is not None:
        if batch.model != model:
            raise ValueError("batch was simulated under a different model")
        return batch
    return sample_terminals(model, seed, n_paths, step=step, threads=threads)


def _n_atoms(batch: TerminalBatch):
    return batch.n_jumps if batch.model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER else None


@dataclass(frozen=True)
class DensityCheck:
    lam: float
    mean: float
    se: float
    z_score: float
    n_paths: int

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= 3.0


def mean_one_density_check(model: ModelSpec, lam: float, n_paths: int = 100_000, seed: int = 0,
                           step: float = DEFAULT_STEP, threads: int = 1, batch=None) -> DensityCheck:
    b = _batch(model, n_paths, seed, step, threads, batch)
    log_z = log_density_terminal(model, lam, b.m_inf, b.stop_time, _n_atoms(b))
    # positivity lives in log space: exp() of a finite log can still underflow
    if not np.all(np.isfinite(log_z)):
        raise InvariantViolation("log density must be finite")
    z = np.exp(log_z)
    acc = MeanAccumulator.from_array(z)
    se = acc.std_error
    if se > 0:
        zs = (acc.mean - 1.0) / se
    else:
        zs = 0.0 if abs(acc.mean - 1.0) < 1e-12 else math.inf
    return DensityCheck(lam, acc.mean, se, zs, len(b))


@dataclass(frozen=True)
class BDGPoint:
    horizon: float
    ratio: float
    se: float
    mean_sup_l2: float
    mean_qv: float


@dataclass(frozen=True)
class BDGSweep:
    points: tuple

    @property
    def ratios(self) -> np.ndarray:
        return np.array([p.ratio for p in self.points])

    @property
    def variation(self) -> float:
        """(max - min) / max over the sweep; 0 when every ratio is 0."""
        r = self.ratios
        top = float(np.max(np.abs(r)))
        return 0.0 if top == 0 else float((np.max(r) - np.min(r)) / top)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios)))


def bdg_ratio_check(model: ModelSpec, horizon: float, n_paths: int = 10_000, seed: int = 0,
                    step: float = DEFAULT_STEP, threads: int = 1) -> BDGPoint:
    """E[sup_{s<=t} L_s^2] / (K^2 E<M>_t) with the model stopped at ``tau ^ horizon``."""
    if model.jump_bound <= 0:
        raise ValueError("the discrepancy bound is vacuous for K = 0 models")
    capped = model.with_params(horizon_cap=float(horizon))
    b = sample_terminals(capped, seed, n_paths, step=step, threads=threads)
    sup2 = b.sup_abs_l**2
    k2 = model.jump_bound**2
    num = MeanAccumulator.from_array(sup2)
    den = MeanAccumulator.from_array(b.qv_pred)
    ratio = num.mean / (k2 * den.mean)
    # delta method for a ratio of correlated means
    cov = float(np.cov(sup2, b.qv_pred)[0, 1]) / len(b)
    var = (num.std_error**2 / den.mean**2 + num.mean**2 * den.std_error**2 / den.mean**4
           - 2 * num.mean * cov / den.mean**3) / k2**2
    return BDGPoint(float(horizon), float(ratio), math.sqrt(max(var, 0.0)), num.mean, den.mean)


def bdg_sweep(model: ModelSpec, horizons=(10.0, 100.0, 1000.0), n_paths: int = 10_000, seed: int = 0,
              step: float = DEFAULT_STEP, threads: int = 1) -> BDGSweep:
    return BDGSweep(tuple(bdg_ratio_check(model, h, n_paths, seed, step, threads) for h in sorted(horizons)))


def bracket_identity_check(model: ModelSpec, horizon: float, n_paths: int = 1000, seed: int = 0,
                           step: float = DEFAULT_STEP) -> bool:
    """``<L>_t == <M>_t`` on every path (holds for unit jumps, where z^4 = z^2)."""
    capped = model.with_params(horizon_cap=float(horizon))
    b = sample_terminals(capped, seed, n_paths, step=step)
    bracket = np.array([discrepancy_bracket(capped, t) for t in b.stop_time])
    return bool(np.all(bracket == b.qv_pred))


@dataclass
class SandwichCheck:
    fraction: float
    n_pairs: int
    lambdas: tuple
    skipped_lambdas: tuple
    violations: list = field(default_factory=list)
    max_relative_gap: float = 0.0


def sandwich_check(model: ModelSpec, lambdas, n_paths: int = 10_000, seed: int = 0,
                   step: float = DEFAULT_STEP, threads: int = 1, batch=None,
                   max_dump: int = 5) -> SandwichCheck:
    """Fraction of (path, lam) pairs with lower <= log E(lam) <= upper, over lambdas with valid bounds.

    For K = 0 the bounds collapse onto log E; ``max_relative_gap`` records the
    largest relative distance of log E from either bound in that case.
    """
    b = _batch(model, n_paths, seed, step, threads, batch)
    used, skipped = [], []
    ok = 0
    total = 0
    gap = 0.0
    violations = []
    for lam in lambdas:
        bounds = sandwich_bounds(lam, model.jump_bound, b.qv_pred)
        if not bounds.valid:
            skipped.append(lam)
            continue
        used.append(lam)
        log_e = log_stochastic_exponential_terminal(model, lam, b.stop_time, _n_atoms(b))
        good = (bounds.lower <= log_e) & (log_e <= bounds.upper)
        ok += int(good.sum())
        total += good.size
        if model.jump_bound == 0:
            scale = np.maximum(np.abs(log_e), np.finfo(float).tiny)
            rel = np.maximum(np.abs(log_e - bounds.lower), np.abs(bounds.upper - log_e)) / scale
            gap = max(gap, float(rel.max()) if rel.size else 0.0)
        for i in np.flatnonzero(~good)[: max(0, max_dump - len(violations))]:
            violations.append(dict(
                path_index=int(b.start + i), lam=float(lam), log_e=float(log_e[i]),
                lower=float(bounds.lower[i]), upper=float(bounds.upper[i]), sample=b[i],
                path=generate_path(model, Seed(seed, int(b.start + i)), step) if batch is None else None,
            ))
    fraction = ok / total if total else math.nan
    return SandwichCheck(fraction, total, tuple(used), tuple(skipped), violations, gap)


@dataclass(frozen=True)
class ZetaEnvelope:
    zeta1_mean: float
    zeta1_max: float
    zeta2_mean: float
    zeta2_max: float
    n_used: int
    n_excluded: int


def theorem2_condition_check(model: ModelSpec, lambdas, n_paths: int = 10_000, seed: int = 0,
                             step: float = DEFAULT_STEP, threads: int = 1, batch=None) -> ZetaEnvelope:
    """Per-path envelopes so that (lam^2/2)<M>(1 - lam zeta1)^+ <= log E(lam) <= (lam^2/2)<M>(1 + lam zeta2).

    One pair per path must serve every lambda of the grid, so each zeta is the
    maximum over the grid.  Paths with <M> = 0 are excluded and counted.
    """
    b = _batch(model, n_paths, seed, step, threads, batch)
    keep = b.qv_pred > 0
    qv = b.qv_pred[keep]
    stop = b.stop_time[keep]
    atoms = _n_atoms(b)
    atoms = atoms[keep] if atoms is not None else None
    z1 = np.zeros(qv.size)
    z2 = np.zeros(qv.size)
    for lam in lambdas:
        half = 0.5 * lam * lam
        r = log_stochastic_exponential_terminal(model, lam, stop, atoms) / (half * qv)
        z2 = np.maximum(z2, (r - 1.0) / lam)
        z1 = np.maximum(z1, (1.0 - r) / lam)
    if qv.size == 0:
        return ZetaEnvelope(math.nan, math.nan, math.nan, math.nan, 0, int((~keep).sum()))
    return ZetaEnvelope(float(z1.mean()), float(z1.max()), float(z2.mean()), float(z2.max()),
                        int(qv.size), int((~keep).sum()))
