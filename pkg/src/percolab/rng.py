"""Counter-based randomness keyed by (seed, replicate, draw index).

Every random draw in the package is a pure function of (seed, replicate,
index): replicate ``r`` gets the stream key ``stream_key(seed, r)`` and its
``i``-th draw is ``word(key, i)``.  There is no mutable generator state, so
sampling is order-independent and replicates can be farmed out to any number
of workers with bit-identical results.

The word function is the splitmix64 finalizer applied to a keyed linear
counter (the SplittableRandom construction with a fixed odd gamma).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = 0xFFFFFFFFFFFFFFFF

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_KEY_ADD = np.uint64(0x8CB92BA72F3D8DD7)
_GAMMA = np.uint64(0xD1B54A32D192ED03)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

#: scale turning the top 53 bits of a word into a double in [0, 1)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX_A
    z = (z ^ (z >> _S27)) * _MIX_B
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True, inline="always")
def _stream_key(seed, replicate):
    return _mix64(seed ^ (replicate * _GOLDEN + _KEY_ADD))


@njit(cache=True, nogil=True, inline="always")
def _word(key, idx):
    return _mix64(key + idx * _GAMMA)


@njit(cache=True, nogil=True, inline="always")
def _uniform(key, idx):
    return (_word(key, idx) >> _S11) * _INV53


@njit(cache=True, nogil=True)
def _uniform_block(key, start, count):
    out = np.empty(count, np.float64)
    for i in range(count):
        out[i] = _uniform(key, np.uint64(start + i))
    return out


@njit(cache=True, nogil=True)
def _bounded_block(key, start, count, bound):
    """``count`` pseudo-uniform integers in [0, bound) at counter ``start``."""
    out = np.empty(count, np.int64)
    b = np.uint64(bound)
    for i in range(count):
        out[i] = np.int64(_word(key, np.uint64(start + i)) % b)
    return out


def stream_key(seed: int, replicate: int) -> np.uint64:
    """Derive the per-replicate stream key from a 64-bit seed."""
    # numba unboxes the scalar as a Python int; rewrap so downstream jit
    # calls type it as uint64 instead of overflowing int64
    return np.uint64(_stream_key(np.uint64(seed & _MASK64), np.uint64(replicate & _MASK64)))


def uniforms(seed: int, replicate: int, count: int, start: int = 0) -> np.ndarray:
    """Doubles in [0, 1) at counter positions start..start+count of a stream."""
    return _uniform_block(stream_key(seed, replicate), start, count)


def bounded_ints(seed: int, replicate: int, count: int, bound: int, start: int = 0) -> np.ndarray:
    """Integers in [0, bound); modulo bias is < bound/2**64 per draw."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    return _bounded_block(stream_key(seed, replicate), start, count, bound)
