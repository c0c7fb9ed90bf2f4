"""Mergeable mean/variance accumulators for chunked Monte Carlo reductions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np


@dataclass(frozen=True)
class MeanAccumulator:
    """Count, mean and centred sum of squares; ``merge`` uses Chan's pairwise update."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_array(cls, x) -> MeanAccumulator:
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return cls()
        mu = float(x.mean())
        return cls(int(x.size), mu, float(np.sum((x - mu) ** 2)))

    def merge(self, other: MeanAccumulator) -> MeanAccumulator:
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return MeanAccumulator(n, mean, m2)

    __add__ = merge

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 1 else math.nan


def merge_all(parts) -> MeanAccumulator:
    return reduce(MeanAccumulator.merge, parts, MeanAccumulator())


def chunked_mean(x, chunk: int) -> MeanAccumulator:
    """Reduce ``x`` chunk by chunk in index order, as parallel workers would."""
    x = np.asarray(x, dtype=float)
    return merge_all(MeanAccumulator.from_array(x[i:i + chunk]) for i in range(0, x.size, chunk))
