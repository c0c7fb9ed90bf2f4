"""Counter-based random streams (Philox4x32-10).

Every path of an experiment owns a stream keyed by ``(master, index)``: the
64-bit master seed is the Philox key and the path index occupies the upper
half of the 128-bit counter, the lower half counts blocks within the path.
Draw ``k`` of path ``i`` is therefore a pure function of ``(master, i, k)``
and does not depend on how paths are distributed over workers.

The stream state is a small ``uint64`` array so that the same sampling
functions run inside numba kernels and from plain Python through
:class:`Stream`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)

# state layout
_K0, _K1, _P0, _P1, _BLK, _POS = 0, 1, 2, 3, 4, 5
_BUF = 6
STATE_SIZE = 10

_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi
UINT64_MAX = (1 << 64) - 1


@nb.njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox4x32 block function on 32-bit words held in uint64."""
    for r in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & MASK32
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & MASK32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & MASK32, lo1, (hi0 ^ c3 ^ k1) & MASK32, lo0
        if r < 9:
            k0 = (k0 + _W0) & MASK32
            k1 = (k1 + _W1) & MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True)
def init_state(st, master, index):
    st[_K0] = master & MASK32
    st[_K1] = master >> np.uint64(32)
    st[_P0] = index & MASK32
    st[_P1] = index >> np.uint64(32)
    st[_BLK] = 0
    st[_POS] = 4


@nb.njit(cache=True, inline="always")
def next_u32(st):
    if st[_POS] == 4:
        blk = st[_BLK]
        w0, w1, w2, w3 = philox4x32(blk & MASK32, blk >> np.uint64(32),
                                    st[_P0], st[_P1], st[_K0], st[_K1])
        st[_BUF] = w0
        st[_BUF + 1] = w1
        st[_BUF + 2] = w2
        st[_BUF + 3] = w3
        st[_BLK] = blk + np.uint64(1)
        st[_POS] = 0
    w = st[_BUF + st[_POS]]
    st[_POS] += np.uint64(1)
    return w


@nb.njit(cache=True, inline="always")
def next_uniform(st):
    """Uniform on the open interval (0, 1) with 53 random bits."""
    a = next_u32(st) >> np.uint64(5)
    b = next_u32(st) >> np.uint64(6)
    return ((a * np.uint64(67108864) + b) + 0.5) * _TWO_M53


@nb.njit(cache=True, inline="always")
def next_normal(st):
    # Box-Muller, cosine branch only: exact Gaussian law, no tables
    u1 = next_uniform(st)
    u2 = next_uniform(st)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@nb.njit(cache=True, inline="always")
def next_exponential(st, rate):
    return -math.log(next_uniform(st)) / rate


@nb.njit(cache=True)
def _fill_uniform(st, out):
    for i in range(out.size):
        out[i] = next_uniform(st)


@nb.njit(cache=True)
def _fill_normal(st, out):
    for i in range(out.size):
        out[i] = next_normal(st)


@nb.njit(cache=True)
def _fill_u32(st, out):
    for i in range(out.size):
        out[i] = next_u32(st)


def _check_u64(value, name):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if not 0 <= value <= UINT64_MAX:
        raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")
    return value


@dataclass(frozen=True)
class Seed:
    """Identifies one stream: master seed plus stream (path) index."""

    master: int
    stream_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master", _check_u64(self.master, "master"))
        object.__setattr__(self, "stream_index", _check_u64(self.stream_index, "stream_index"))


def derive_stream(master: int, index: int) -> Seed:
    """Seed of path ``index`` under ``master``; distinct pairs never share a counter."""
    return Seed(master, index)


class Stream:
    """Single-owner sampler over one counter-based stream."""

    def __init__(self, seed: Seed):
        self.seed = seed
        self.state = np.zeros(STATE_SIZE, dtype=np.uint64)
        init_state(self.state, np.uint64(seed.master), np.uint64(seed.stream_index))

    def u32(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint64)
        _fill_u32(self.state, out)
        return out

    def uniform(self, n: int) -> np.ndarray:
        out = np.empty(n)
        _fill_uniform(self.state, out)
        return out

    def normal(self, n: int) -> np.ndarray:
        out = np.empty(n)
        _fill_normal(self.state, out)
        return out


def sample_standard_normal(s: Stream) -> float:
    return float(next_normal(s.state))


def sample_exponential(s: Stream, rate: float) -> float:
    if not (math.isfinite(rate) and rate > 0):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    return float(next_exponential(s.state, float(rate)))


def sample_uniform(s: Stream, lo: float, hi: float) -> float:
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError(f"need finite lo < hi, got ({lo}, {hi})")
    return lo + (hi - lo) * float(next_uniform(s.state))
