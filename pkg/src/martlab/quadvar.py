"""Predictable and optional quadratic variation along recorded paths.

``<M>`` always comes from the model's closed-form compensator; ``[M, M]`` is
realized: squared grid increments of the continuous part plus squared jumps.
The discrepancy ``L = [M, M] - <M>`` is evaluated on the jump skeleton with the
continuous contributions cancelling exactly, so ``L`` is purely discontinuous.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import ModelKind, ModelSpec, PathRecord


@dataclass(frozen=True)
class QVBreakdown:
    qv_cont: float = 0.0
    qv_jump_pred: float = 0.0
    qv_opt_cont: float = 0.0
    qv_jump_opt: float = 0.0

    @property
    def qv_pred(self) -> float:
        return self.qv_cont + self.qv_jump_pred

    @property
    def qv_opt(self) -> float:
        return self.qv_opt_cont + self.qv_jump_opt


def _fsum_sq(x) -> float:
    # compensated summation; event counts can reach 1e8
    return math.fsum((np.asarray(x, dtype=float) ** 2).tolist())


def _check_match(path: PathRecord, model: ModelSpec):
    if path.model is not None and path.model != model:
        raise ValueError(f"path was generated under {path.model.kind.value}, not {model.kind.value}")
    if path.jump_sizes.size and np.max(np.abs(path.jump_sizes)) > model.jump_bound:
        raise ValueError("path has jumps larger than the model bound K")


def atom_count(model: ModelSpec, t: float) -> int:
    """Number of compensator atoms in (0, t]; only model E has atoms (at integer times)."""
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        return int(math.floor(t))
    return 0


def predictable_qv(path: PathRecord, model: ModelSpec) -> QVBreakdown:
    _check_match(path, model)
    t = path.end_time
    cont = model.sigma**2 * t
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        jump = float(atom_count(model, t))
    else:
        jump = model.jump_qv_rate * t
    return QVBreakdown(qv_cont=cont, qv_jump_pred=jump)


def optional_qv(path: PathRecord) -> QVBreakdown:
    return QVBreakdown(qv_opt_cont=_fsum_sq(np.diff(path.cont_values)),
                       qv_jump_opt=_fsum_sq(path.jump_sizes))


def discrepancy(path: PathRecord, model: ModelSpec) -> tuple[float, float]:
    """Terminal value and running supremum of ``|L_t|`` for ``L = [M,M] - <M>``.

    Between jumps ``L`` moves only through the compensator of the jump part, so
    its extremes sit just before and just after jump epochs, plus the end time.
    """
    _check_match(path, model)
    t_end = path.end_time
    jt, z2 = path.jump_times, path.jump_sizes**2
    after = np.cumsum(z2)
    before = after - z2
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        # one unit atom per integer time
        comp_at = np.floor(jt)
        comp_before = comp_at - 1.0
        comp_end = float(atom_count(model, t_end))
    else:
        rate = model.jump_qv_rate
        comp_at = rate * jt
        comp_before = comp_at
        comp_end = rate * t_end
    l_end = (after[-1] if after.size else 0.0) - comp_end
    candidates = [abs(l_end)]
    if jt.size:
        candidates.append(float(np.max(np.abs(before - comp_before))))
        candidates.append(float(np.max(np.abs(after - comp_at))))
    return float(l_end), max(candidates)


def discrepancy_bracket(model: ModelSpec, t: float) -> float:
    """Closed-form ``<L>_t = int z^4 nu(ds,dz) - sum_s (int z^2 nu({s},dz))^2``."""
    k = model.kind
    if k is ModelKind.COMPENSATED_POISSON_UPPER:
        return model.jump_rate * t
    if k is ModelKind.JUMP_DIFFUSION_TWO_SIDED:
        return model.jump_rate * t * model.jump_bound**4 / 5.0
    # model E: each atom has z^4 mass 1 and (z^2 mass)^2 = 1; continuous models have no jumps
    return 0.0


def realized_qv_grid(values) -> float:
    return _fsum_sq(np.diff(np.asarray(values, dtype=float)))
