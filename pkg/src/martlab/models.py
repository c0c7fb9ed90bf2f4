"""Catalog of square-integrable martingales with bounded jumps.

Five models with closed-form compensators:

A  ``stopped_brownian_upper``     sigma*W stopped at level a (exact terminal law)
B  ``stopped_brownian_two_sided`` sigma*W stopped on leaving (-b, a)
C  ``compensated_poisson_upper``  N_t - rho*t stopped once >= a (unit jumps)
D  ``jump_diffusion_two_sided``   sigma*W + compensated uniform[-K, K] jumps, two barriers
E  ``random_walk_atoms_upper``    +-1 coin flips at integer times, stopped at a

A, C and E are bounded above by ``a + K`` and have ``E M_inf > 0``; B and D
are bounded and uniformly integrable.  Censored paths (no stop before
``horizon_cap``) are always reported, never dropped.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.special import ndtr

from . import _kernels as kern
from .rng import STATE_SIZE, Seed, init_state

CHUNK = 1 << 16
DEFAULT_STEP = 1e-3
DEFAULT_T_MAX = 1e6
DEFAULT_MAX_EVENTS = 10**8


class ModelKind(str, Enum):
    STOPPED_BROWNIAN_UPPER = "StoppedBrownianUpper"
    STOPPED_BROWNIAN_TWO_SIDED = "StoppedBrownianTwoSided"
    COMPENSATED_POISSON_UPPER = "CompensatedPoissonUpper"
    JUMP_DIFFUSION_TWO_SIDED = "JumpDiffusionTwoSided"
    RANDOM_WALK_ATOMS_UPPER = "RandomWalkAtomsUpper"

    @property
    def letter(self) -> str:
        return "ABCDE"[list(ModelKind).index(self)]


class Unavailable:
    """Returned by :func:`analytic_oracle` when a model has no closed form."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Unavailable"


UNAVAILABLE = Unavailable()

_CONTINUOUS = {ModelKind.STOPPED_BROWNIAN_UPPER, ModelKind.STOPPED_BROWNIAN_TWO_SIDED}
_TWO_SIDED = {ModelKind.STOPPED_BROWNIAN_TWO_SIDED, ModelKind.JUMP_DIFFUSION_TWO_SIDED}


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    sigma: float = 0.0
    jump_rate: float = 0.0
    jump_bound: float = 0.0
    barrier_up: float = 1.0
    barrier_down: float | None = None
    horizon_cap: float = DEFAULT_T_MAX
    epsilon: float = 1.0
    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        k = self.kind
        for name in ("sigma", "jump_rate", "jump_bound"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite nonnegative real, got {v}")
        if not (math.isfinite(self.barrier_up) and self.barrier_up > 0):
            raise ValueError(f"barrier_up must be positive, got {self.barrier_up}")
        if not (self.horizon_cap > 0 and math.isfinite(self.horizon_cap)):
            raise ValueError(f"horizon_cap must be positive, got {self.horizon_cap}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_events < 1:
            raise ValueError("max_events must be at least 1")
        if k in _TWO_SIDED:
            if self.barrier_down is None or not (math.isfinite(self.barrier_down) and self.barrier_down > 0):
                raise ValueError(f"{k.value} needs a positive barrier_down")
        elif self.barrier_down is not None:
            raise ValueError(f"{k.value} is one-sided; barrier_down must be absent")
        if (self.jump_bound == 0) != (k in _CONTINUOUS):
            raise ValueError("jump_bound K must be 0 exactly for the continuous models A and B")
        if k in _CONTINUOUS:
            if self.sigma <= 0:
                raise ValueError("continuous models need sigma > 0")
            if self.jump_rate != 0:
                raise ValueError("continuous models have no jumps (jump_rate must be 0)")
        if k is ModelKind.COMPENSATED_POISSON_UPPER:
            if self.sigma != 0 or self.jump_bound != 1 or self.jump_rate <= 0:
                raise ValueError("model C has sigma=0, unit jumps (K=1) and jump_rate > 0")
        if k is ModelKind.RANDOM_WALK_ATOMS_UPPER:
            if self.sigma != 0 or self.jump_bound != 1 or self.jump_rate != 0:
                raise ValueError("model E has sigma=0, K=1 and no jump_rate")
            if self.barrier_up != int(self.barrier_up):
                raise ValueError("model E needs an integer barrier_up")
        if k is ModelKind.JUMP_DIFFUSION_TWO_SIDED and self.sigma == 0 and self.jump_rate == 0:
            raise ValueError("model D needs sigma > 0 or jump_rate > 0")

    @property
    def letter(self) -> str:
        return self.kind.letter

    @property
    def is_continuous(self) -> bool:
        return self.kind in _CONTINUOUS

    @property
    def two_sided(self) -> bool:
        return self.kind in _TWO_SIDED

    @property
    def compensator_drift(self) -> float:
        """Drift rho*E[z] removed from the raw jump sum (nonzero only for C)."""
        if self.kind is ModelKind.COMPENSATED_POISSON_UPPER:
            return self.jump_rate
        return 0.0

    @property
    def jump_qv_rate(self) -> float:
        """d<M^d>/dt for the quasi-left-continuous models."""
        if self.kind is ModelKind.COMPENSATED_POISSON_UPPER:
            return self.jump_rate
        if self.kind is ModelKind.JUMP_DIFFUSION_TWO_SIDED:
            return self.jump_rate * self.jump_bound**2 / 3.0
        return 0.0

    def with_params(self, **changes) -> ModelSpec:
        return replace(self, **changes)


def stopped_brownian_upper(a=1.0, sigma=1.0, **kw) -> ModelSpec:
    return ModelSpec(ModelKind.STOPPED_BROWNIAN_UPPER, sigma=sigma, barrier_up=a, **kw)


def stopped_brownian_two_sided(a=1.0, b=2.0, sigma=1.0, **kw) -> ModelSpec:
    return ModelSpec(ModelKind.STOPPED_BROWNIAN_TWO_SIDED, sigma=sigma, barrier_up=a, barrier_down=b, **kw)


def compensated_poisson_upper(a=1.0, rho=1.0, **kw) -> ModelSpec:
    return ModelSpec(ModelKind.COMPENSATED_POISSON_UPPER, jump_rate=rho, jump_bound=1.0, barrier_up=a, **kw)


def jump_diffusion_two_sided(sigma=1.0, rho=2.0, K=1.0, a=1.0, b=1.0, **kw) -> ModelSpec:
    return ModelSpec(ModelKind.JUMP_DIFFUSION_TWO_SIDED, sigma=sigma, jump_rate=rho, jump_bound=K,
                     barrier_up=a, barrier_down=b, **kw)


def random_walk_atoms_upper(a=1, **kw) -> ModelSpec:
    return ModelSpec(ModelKind.RANDOM_WALK_ATOMS_UPPER, jump_bound=1.0, barrier_up=float(a), **kw)


FACTORIES = {
    ModelKind.STOPPED_BROWNIAN_UPPER: stopped_brownian_upper,
    ModelKind.STOPPED_BROWNIAN_TWO_SIDED: stopped_brownian_two_sided,
    ModelKind.COMPENSATED_POISSON_UPPER: compensated_poisson_upper,
    ModelKind.JUMP_DIFFUSION_TWO_SIDED: jump_diffusion_two_sided,
    ModelKind.RANDOM_WALK_ATOMS_UPPER: random_walk_atoms_upper,
}


@dataclass(frozen=True)
class TerminalSample:
    """Per-path summary.  When ``censored`` the quadratic variations are lower bounds."""

    m_inf: float
    qv_pred: float
    qv_opt: float
    sup_neg: float
    censored: bool
    stop_time: float
    n_jumps: int = 0


@dataclass
class TerminalBatch:
    """Column-wise terminal samples for paths ``start .. start + n - 1``."""

    model: ModelSpec
    m_inf: np.ndarray
    qv_pred: np.ndarray
    qv_opt: np.ndarray
    sup_neg: np.ndarray
    censored: np.ndarray
    stop_time: np.ndarray
    n_jumps: np.ndarray
    sup_abs_l: np.ndarray
    start: int = 0

    def __len__(self):
        return self.m_inf.size

    def __getitem__(self, i) -> TerminalSample:
        return TerminalSample(float(self.m_inf[i]), float(self.qv_pred[i]), float(self.qv_opt[i]),
                              float(self.sup_neg[i]), bool(self.censored[i]), float(self.stop_time[i]),
                              int(self.n_jumps[i]))

    @property
    def censored_fraction(self) -> float:
        return float(self.censored.mean()) if len(self) else 0.0


@dataclass
class PathRecord:
    """One simulated path; ``values`` are right-continuous values of M at ``times``.

    ``stop_time`` is ``None`` for censored paths, which end at the horizon cap.
    """

    times: np.ndarray
    values: np.ndarray
    cont_values: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    stop_time: float | None
    model: ModelSpec = field(repr=False, default=None)

    @property
    def censored(self) -> bool:
        return self.stop_time is None

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def jumps(self):
        return list(zip(self.jump_times.tolist(), self.jump_sizes.tolist()))


def _qv_columns(model: ModelSpec, end, n_jumps, sumsq):
    cont = model.sigma**2 * end
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        pred = n_jumps.astype(float) if isinstance(n_jumps, np.ndarray) else float(n_jumps)
    else:
        pred = cont + model.jump_qv_rate * end
    return pred, cont + sumsq


def _run_rows(model: ModelSpec, master: int, start: int, rows: np.ndarray, step: float):
    m = np.uint64(master)
    k = model.kind
    if k is ModelKind.STOPPED_BROWNIAN_UPPER:
        kern.bm_exact_batch(m, start, model.sigma, model.barrier_up, model.horizon_cap, rows)
    elif k is ModelKind.COMPENSATED_POISSON_UPPER:
        kern.cp_batch(m, start, model.jump_rate, model.barrier_up, model.horizon_cap, model.max_events, rows)
    elif k is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        nmax = min(int(math.floor(model.horizon_cap)), model.max_events)
        kern.rw_batch(m, start, int(model.barrier_up), nmax, rows)
    else:
        _check_step(model, step)
        kern.jd_batch(m, start, model.sigma, model.jump_rate, model.jump_bound, model.barrier_up,
                      model.barrier_down, model.horizon_cap, step, rows)


def _check_step(model: ModelSpec, h: float):
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"step h must be positive, got {h}")
    if h > model.horizon_cap:
        raise ValueError(f"step h={h} exceeds the horizon cap {model.horizon_cap}")
    if model.sigma > 0:
        gap = model.barrier_up if model.barrier_down is None else min(model.barrier_up, model.barrier_down)
        if model.sigma * math.sqrt(h) > 0.5 * gap:
            raise ValueError(f"step h={h} too large for barriers: sigma*sqrt(h) exceeds half the barrier distance")


def simulate_rows(model: ModelSpec, master: int, n: int, start: int = 0, step: float = DEFAULT_STEP,
                  threads: int = 1) -> np.ndarray:
    """Raw kernel rows for paths ``start .. start+n-1``.

    Paths are cut into fixed chunks of ``CHUNK`` indices; ``threads`` only
    decides which worker runs a chunk, so the result is bit-identical for any
    worker count.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rows = np.zeros((n, kern.N_COLS))
    bounds = [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]

    def work(b):
        lo, hi = b
        _run_rows(model, master, start + lo, rows[lo:hi], step)

    if threads <= 1 or len(bounds) <= 1:
        for b in bounds:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    return rows


def sample_terminals(model: ModelSpec, master: int, n: int, start: int = 0, step: float = DEFAULT_STEP,
                     threads: int = 1) -> TerminalBatch:
    rows = simulate_rows(model, master, n, start=start, step=step, threads=threads)
    end = rows[:, kern.COL_END]
    n_jumps = rows[:, kern.COL_NJUMP].astype(np.int64)
    qv_pred, qv_opt = _qv_columns(model, end, n_jumps, rows[:, kern.COL_SUMSQ])
    return TerminalBatch(
        model=model,
        m_inf=rows[:, kern.COL_M].copy(),
        qv_pred=np.asarray(qv_pred, dtype=float),
        qv_opt=np.asarray(qv_opt, dtype=float),
        sup_neg=rows[:, kern.COL_SUPNEG].copy(),
        censored=rows[:, kern.COL_CENSORED] > 0,
        stop_time=end.copy(),
        n_jumps=n_jumps,
        sup_abs_l=rows[:, kern.COL_SUPL].copy(),
        start=start,
    )


def sample_terminal(model: ModelSpec, seed: Seed, step: float = DEFAULT_STEP) -> TerminalSample:
    """Terminal summary of the single path owned by ``seed``."""
    return sample_terminals(model, seed.master, 1, start=seed.stream_index, step=step)[0]


def generate_path(model: ModelSpec, seed: Seed, step: float = DEFAULT_STEP, capacity: int = 4096) -> PathRecord:
    """Record the full path owned by ``seed`` on the grid ``k*step`` plus jump epochs.

    Model A is discretized (Euler plus bridge-corrected stopping); C, D and E
    insert their exact jump epochs.  For B, C, D, E the recorded path ends in
    the same state as :func:`sample_terminal` for the same seed and step.
    """
    _check_step(model, step)
    k = model.kind
    st = np.empty(STATE_SIZE, dtype=np.uint64)
    cap = max(int(capacity), 16)
    while True:
        init_state(st, np.uint64(seed.master), np.uint64(seed.stream_index))
        times, vals, conts = np.empty(cap), np.empty(cap), np.empty(cap)
        jt, js = np.empty(cap), np.empty(cap)
        out = np.zeros(kern.N_COLS)
        if k is ModelKind.COMPENSATED_POISSON_UPPER:
            kern.cp_run(st, model.jump_rate, model.barrier_up, model.horizon_cap, model.max_events, step,
                        True, times, vals, conts, jt, js, out)
        elif k is ModelKind.RANDOM_WALK_ATOMS_UPPER:
            nmax = min(int(math.floor(model.horizon_cap)), model.max_events)
            kern.rw_run(st, int(model.barrier_up), nmax, True, times, vals, conts, jt, js, out)
        else:
            b = np.inf if model.barrier_down is None else model.barrier_down
            kern.jd_run(st, model.sigma, model.jump_rate, model.jump_bound, model.barrier_up, b,
                        model.horizon_cap, step, True, times, vals, conts, jt, js, out)
        if out[kern.COL_OVERFLOW] == 0:
            break
        cap = 2 * max(cap, int(out[kern.COL_NREC]), int(out[kern.COL_NJREC]))
    nrec, njrec = int(out[kern.COL_NREC]), int(out[kern.COL_NJREC])
    censored = out[kern.COL_CENSORED] > 0
    return PathRecord(
        times=times[:nrec].copy(),
        values=vals[:nrec].copy(),
        cont_values=conts[:nrec].copy(),
        jump_times=jt[:njrec].copy(),
        jump_sizes=js[:njrec].copy(),
        stop_time=None if censored else float(out[kern.COL_END]),
        model=model,
    )


def qv_tail_exact(model: ModelSpec, lam):
    """P(<M>^{1/2}_inf > lam) for model A: 2*Phi(a/lam) - 1."""
    lam = np.asarray(lam, dtype=float)
    return 2.0 * ndtr(model.barrier_up / lam) - 1.0


def qv_cdf_exact(model: ModelSpec, t):
    """P(<M>_inf <= t) for model A: 2*(1 - Phi(a/sqrt(t)))."""
    t = np.asarray(t, dtype=float)
    return 2.0 * (1.0 - ndtr(model.barrier_up / np.sqrt(t)))


ORACLE_QUERIES = ("qv_tail", "supneg_tail", "laplace", "mean_terminal")


def analytic_oracle(model: ModelSpec, query: str, lam: float | None = None):
    """Closed-form ground truth, or :data:`UNAVAILABLE` where none is implemented."""
    if query not in ORACLE_QUERIES:
        raise ValueError(f"unknown oracle query {query!r}; expected one of {ORACLE_QUERIES}")
    if query != "mean_terminal":
        if lam is None or not lam > 0:
            raise ValueError(f"query {query!r} needs lam > 0")
    a = model.barrier_up
    if model.kind is ModelKind.STOPPED_BROWNIAN_UPPER:
        if query == "qv_tail":
            return float(qv_tail_exact(model, lam))
        if query == "supneg_tail":
            return a / (a + lam)
        if query == "laplace":
            return math.exp(-a * lam)
        return a
    if model.kind is ModelKind.STOPPED_BROWNIAN_TWO_SIDED:
        if query == "mean_terminal":
            return 0.0
        if query == "supneg_tail" and lam >= model.barrier_down:
            return 0.0
    return UNAVAILABLE


CATALOG = {
    ModelKind.STOPPED_BROWNIAN_UPPER: dict(
        letter="A",
        summary="sigma*W stopped at the first hit of a; exact terminal sampler (tau = (a/sigma)^2/Z^2)",
        params={"a": "barrier_up > 0", "sigma": "> 0", "horizon_cap": "> 0"},
        oracles=["qv_tail", "supneg_tail", "laplace", "mean_terminal"],
    ),
    ModelKind.STOPPED_BROWNIAN_TWO_SIDED: dict(
        letter="B",
        summary="sigma*W stopped on leaving (-b, a); Euler grid with bridge-corrected exits",
        params={"a": "barrier_up > 0", "b": "barrier_down > 0", "sigma": "> 0", "horizon_cap": "> 0"},
        oracles=["supneg_tail (lam >= b)", "mean_terminal"],
    ),
    ModelKind.COMPENSATED_POISSON_UPPER: dict(
        letter="C",
        summary="N_t - rho*t (unit jumps, K = 1) stopped once >= a; event-driven exact",
        params={"a": "barrier_up > 0", "rho": "jump_rate > 0", "horizon_cap": "> 0", "max_events": ">= 1"},
        oracles=["brute-force"],
    ),
    ModelKind.JUMP_DIFFUSION_TWO_SIDED: dict(
        letter="D",
        summary="sigma*W + compensated uniform[-K, K] jumps at rate rho, stopped on leaving (-b, a)",
        params={"sigma": ">= 0", "rho": "jump_rate >= 0", "K": "jump_bound > 0", "a": "barrier_up > 0",
                "b": "barrier_down > 0", "horizon_cap": "> 0"},
        oracles=["brute-force"],
    ),
    ModelKind.RANDOM_WALK_ATOMS_UPPER: dict(
        letter="E",
        summary="+-1 steps with probability 1/2 at t = 1, 2, ...; stopped at first visit to integer a",
        params={"a": "integer barrier_up >= 1", "horizon_cap": "> 0", "max_events": ">= 1"},
        oracles=["brute-force"],
    ),
}
