"""Traffic models, admissibility, and Poisson arrival sampling.

Rates are packets per slot per (source port, destination port) pair.
Cross-server demand only: diagonal blocks of a rate matrix are all zero by
construction, since a server does not send to itself through the fabric.

Two workload builders are provided. The uniform model spreads r0 over every
cross-server port pair. The hotspot model concentrates the whole block's
worth, m*m*r0, on the first-GPU pair of every server pair, which keeps the
server-to-server aggregates of the two models identical while making the
port-level load maximally lopsided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .matrixcore import BlockMatrix, BlockShape, DimensionError, IntMatrix


class RateMatrix:
    """Per-port-pair arrival rates with the zero-diagonal-block convention."""

    __slots__ = ("shape", "rates")

    def __init__(self, shape: BlockShape, rates: np.ndarray) -> None:
        arr = np.asarray(rates, dtype=np.float64)
        ports = shape.ports
        if arr.shape != (ports, ports):
            raise DimensionError(f"rates must be {ports}x{ports}, got {arr.shape}")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ValueError("rates must be finite and nonnegative")
        m = shape.gpus_per_server
        for i in range(shape.servers):
            blk = arr[i * m : (i + 1) * m, i * m : (i + 1) * m]
            if blk.any():
                raise ValueError(f"diagonal block ({i}, {i}) must be all zero")
        arr = arr.copy()
        arr.setflags(write=False)
        self.shape = shape
        self.rates = arr

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RateMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.rates, other.rates)

    def __repr__(self) -> str:
        s = self.shape
        return f"RateMatrix({s.servers}x{s.gpus_per_server}, total={self.rates.sum():.6g})"


def _check_r0(r0: float) -> float:
    if not isinstance(r0, (int, float)) or isinstance(r0, bool):
        raise ValueError(f"r0 must be a number, got {r0!r}")
    r0 = float(r0)
    if not math.isfinite(r0) or r0 < 0.0:
        raise ValueError(f"r0 must be finite and nonnegative, got {r0}")
    return r0


def rate_matrix_uniform(shape: BlockShape, r0: float) -> RateMatrix:
    """Rate r0 on every cross-server port pair."""
    r0 = _check_r0(r0)
    m = shape.gpus_per_server
    arr = np.full((shape.ports, shape.ports), r0, dtype=np.float64)
    for i in range(shape.servers):
        arr[i * m : (i + 1) * m, i * m : (i + 1) * m] = 0.0
    return RateMatrix(shape, arr)


def rate_matrix_hotspot(shape: BlockShape, r0: float) -> RateMatrix:
    """The whole block aggregate m*m*r0 on each block's first-GPU pair."""
    r0 = _check_r0(r0)
    m = shape.gpus_per_server
    hot = (m * m) * r0
    arr = np.zeros((shape.ports, shape.ports), dtype=np.float64)
    for i in range(shape.servers):
        for j in range(shape.servers):
            if i != j:
                arr[i * m, j * m] = hot
    return RateMatrix(shape, arr)


@dataclass
class ServerRates:
    """Server-level aggregate rates: entry (i, j) is (1/m) * sum of block (i, j)."""

    servers: int
    values: list[list[float]]

    def out_sums(self) -> list[float]:
        return [math.fsum(row) for row in self.values]

    def in_sums(self) -> list[float]:
        return [
            math.fsum(self.values[i][j] for i in range(self.servers))
            for j in range(self.servers)
        ]


def server_rates(r: RateMatrix) -> ServerRates:
    n = r.shape.servers
    m = r.shape.gpus_per_server
    values = [
        [
            math.fsum(
                float(v)
                for v in r.rates[i * m : (i + 1) * m, j * m : (j + 1) * m].flat
            )
            / m
            for j in range(n)
        ]
        for i in range(n)
    ]
    return ServerRates(servers=n, values=values)


@dataclass(frozen=True)
class Admissibility:
    """Stability verdict plus how much headroom is left.

    Truthy iff admissible; also unpacks as (ok, slack) so callers can grab
    the margin without a second call. slack is 1 minus the largest server
    aggregate sum and goes negative past saturation.
    """

    ok: bool
    slack: float

    def __bool__(self) -> bool:
        return self.ok

    def __iter__(self):
        return iter((self.ok, self.slack))


def is_admissible(r: RateMatrix) -> Admissibility:
    """Strict server-level stability check: every aggregate in/out sum < 1.

    Sums use math.fsum (exactly rounded), so a workload sitting exactly on
    the capacity boundary is rejected rather than slipping under it through
    accumulated rounding.
    """
    agg = server_rates(r)
    biggest = max(max(agg.out_sums()), max(agg.in_sums()))
    return Admissibility(ok=biggest < 1.0, slack=1.0 - biggest)


@dataclass(frozen=True)
class StreamKey:
    """Names one frame's arrival randomness: (master seed, frame index)."""

    seed: int
    frame: int


@dataclass
class ArrivalBatch:
    """Arrivals of one frame as a count matrix."""

    frame: int
    counts: BlockMatrix


def sample_arrivals(r: RateMatrix, duration: int, key: StreamKey) -> ArrivalBatch:
    """Exact Poisson counts for one frame of ``duration`` slots.

    Each port pair (flow) draws from its own stream keyed by
    (seed, frame, flow index) with flow index = src_port * ports + dst_port,
    so the batch does not depend on evaluation order, and any single flow can
    be re-drawn in isolation.
    """
    if duration < 1:
        raise ValueError(f"duration must be >= 1 slot, got {duration}")
    ports = r.shape.ports
    src, dst = np.nonzero(r.rates)
    ids = src.astype(np.uint64) * np.uint64(ports) + dst.astype(np.uint64)
    keys = streams.flow_keys(key.seed, key.frame, ids)
    mus = r.rates[src, dst] * float(duration)
    counts_vec = streams.poisson_batch(mus, keys)
    counts = IntMatrix.zeros(ports, ports)
    for q in range(len(src)):
        v = int(counts_vec[q])
        if v:
            counts[int(src[q]), int(dst[q])] = v
    return ArrivalBatch(frame=key.frame, counts=BlockMatrix(r.shape, counts))


__all__ = [
    "Admissibility",
    "RateMatrix",
    "ServerRates",
    "StreamKey",
    "ArrivalBatch",
    "rate_matrix_uniform",
    "rate_matrix_hotspot",
    "server_rates",
    "is_admissible",
    "sample_arrivals",
]
