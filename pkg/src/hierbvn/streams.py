"""Splittable keyed random streams and exact Poisson sampling.

Arrival sampling must be a pure function of (master seed, frame, flow): the
same inputs give the same counts no matter what order flows are evaluated in
or what ran before. That rules out a single sequential generator, so this
module builds a key tree out of the splitmix64 finalizer:

    run key   = child(seed, 0)
    frame key = child(run key, frame)
    flow key  = child(frame key, flow index)
    word t    = child(flow key, t)            independent 64-bit stream

with child(k, i) = mix64(k + (i + 1) * GOLDEN) over wrapping uint64
arithmetic. Each 64-bit word becomes a double in the open interval (0, 1).

Poisson counts are drawn exactly (no normal approximation):

  mean below 30: inversion by sequential search, one word per draw.
  mean 30 and up: transformed rejection with squeeze (Hoermann's PTRS),
    two words per attempt, acceptance probability well above 0.9. Valid for
    means >= 10, so the switchover at 30 sits comfortably inside its range.

Everything here is numba-compiled; the simulator's frame loop calls the same
kernels, so fast and verify modes consume identical randomness by
construction.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO53_INV = 2.0**-53

# Sequential search is only used below mean 30; this cap is astronomically
# beyond any reachable count there and only guards against a stagnating
# floating-point CDF in the extreme tail.
_INVERSION_CAP = 400
_PTRS_THRESHOLD = 30.0


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _child(key, index):
    return _mix64(key + (index + _ONE) * GOLDEN)


@njit(cache=True)
def _unit(word):
    # (0, 1), never exactly 0 or 1: the half-ulp offset keeps logs finite.
    return (np.float64(word >> _S11) + 0.5) * _TWO53_INV


@njit(cache=True)
def _poisson_one(mu, key):
    if mu <= 0.0:
        return np.int64(0)
    if mu < _PTRS_THRESHOLD:
        u = _unit(_child(key, np.uint64(0)))
        k = np.int64(0)
        p = math.exp(-mu)
        acc = p
        while u > acc and k < _INVERSION_CAP:
            k += 1
            p *= mu / k
            acc += p
        return k
    slam = math.sqrt(mu)
    loglam = math.log(mu)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    t = np.uint64(0)
    while True:
        big_u = _unit(_child(key, t)) - 0.5
        v = _unit(_child(key, t + _ONE))
        t += np.uint64(2)
        us = 0.5 - abs(big_u)
        k = math.floor((2.0 * a / us + b) * big_u + mu + 0.43)
        if us >= 0.07 and v <= vr:
            return np.int64(k)
        if k < 0.0 or (us < 0.013 and v > us):
            continue
        if (
            math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
            <= k * loglam - mu - math.lgamma(k + 1.0)
        ):
            return np.int64(k)


@njit(cache=True)
def _poisson_many(mus, keys):
    out = np.empty(mus.shape[0], dtype=np.int64)
    for q in range(mus.shape[0]):
        out[q] = _poisson_one(mus[q], keys[q])
    return out


@njit(cache=True)
def _flow_keys(frame_key, flow_ids):
    out = np.empty(flow_ids.shape[0], dtype=np.uint64)
    for q in range(flow_ids.shape[0]):
        out[q] = _child(frame_key, flow_ids[q])
    return out


def run_key(seed: int) -> int:
    """Root key of one simulation run's stream tree."""
    return int(_child(np.uint64(seed & (2**64 - 1)), np.uint64(0)))


def frame_key(seed: int, frame: int) -> int:
    if frame < 0:
        raise ValueError("frame index must be nonnegative")
    return int(_child(np.uint64(run_key(seed)), np.uint64(frame)))


def flow_key(seed: int, frame: int, flow_index: int) -> int:
    if flow_index < 0:
        raise ValueError("flow index must be nonnegative")
    return int(_child(np.uint64(frame_key(seed, frame)), np.uint64(flow_index)))


def poisson(mu: float, key: int) -> int:
    """One exact Poisson draw from the stream under ``key``."""
    if not (mu >= 0.0) or math.isinf(mu):
        raise ValueError(f"mean must be finite and nonnegative, got {mu}")
    return int(_poisson_one(np.float64(mu), np.uint64(key & (2**64 - 1))))


def flow_keys(seed: int, frame: int, flow_indices: np.ndarray) -> np.ndarray:
    """Vector of per-flow stream keys under (seed, frame)."""
    ids = np.ascontiguousarray(flow_indices, dtype=np.uint64)
    return _flow_keys(np.uint64(frame_key(seed, frame)), ids)


def poisson_batch(mus: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Vector of exact Poisson draws, one independent stream per entry."""
    mus = np.ascontiguousarray(mus, dtype=np.float64)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    if mus.shape != keys.shape or mus.ndim != 1:
        raise ValueError("mus and keys must be 1-d arrays of equal length")
    if mus.size and (not np.isfinite(mus).all() or mus.min() < 0.0):
        raise ValueError("means must be finite and nonnegative")
    return _poisson_many(mus, keys)


__all__ = [
    "GOLDEN",
    "run_key",
    "frame_key",
    "flow_key",
    "flow_keys",
    "poisson",
    "poisson_batch",
]
