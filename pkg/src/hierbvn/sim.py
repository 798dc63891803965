"""Frame-driven crossbar simulator with adaptive frame sizing.

Time is slotted and grouped into frames. Frame f clears the backlog captured
at its start while new arrivals accumulate for frame f+1. The next frame's
length is whatever the two-tier schedule of the (optionally balanced) new
backlog needs, so frame sizes grow and shrink with the traffic:

    frame 1: empty backlog, one idle slot.
    frame f: backlog = arrivals of frame f-1; length = its schedule's
             slot count (1 if the backlog is zero).

Two execution modes produce identical sequences by construction:

  fast    computes each frame's slot count from per-block scales without
          materializing schedules. Runs inside one compiled loop.
  verify  builds every schedule, replays it slot by slot against the
          balanced backlog, and raises if a single packet is left over or
          over-served.

Both modes draw arrivals from the same keyed streams (streams.py), so a
fast run and a verify run with the same config see the same traffic.

A frame longer than ``frame_cap`` aborts the run with diverged=True; that is
the escape hatch for deliberately inadmissible workloads.

Statistics cover frames fully inside [warmup, horizon]: start slot at or
past the warmup, end slot at or before the horizon. The final frame may
straddle the horizon; it still executes but is not counted.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .balancing import balance_all_blocks
from .hierarchical import hier_decompose
from .matrixcore import (
    BlockMatrix,
    BlockShape,
    IntMatrix,
    Schedule,
    SubPermutation,
    aggregate_servers,
    ceil_div,
)
from .streams import _child, _poisson_one, run_key
from .traffic import (
    RateMatrix,
    StreamKey,
    is_admissible,
    rate_matrix_hotspot,
    rate_matrix_uniform,
    sample_arrivals,
)

MODEL_UNIFORM = "U"
MODEL_HOTSPOT = "NU"
DEFAULT_FRAME_CAP = 1_000_000


class ScheduleVerificationError(RuntimeError):
    """A verify-mode frame failed its slot-by-slot replay."""


@dataclass(frozen=True)
class SimConfig:
    servers: int
    gpus_per_server: int
    model: str
    r0: float
    horizon: int
    warmup: int
    seed: int
    balancing: bool
    mode: str = "fast"
    frame_cap: int = DEFAULT_FRAME_CAP

    def __post_init__(self) -> None:
        if self.model not in (MODEL_UNIFORM, MODEL_HOTSPOT):
            raise ValueError(f"model must be 'U' or 'NU', got {self.model!r}")
        if self.mode not in ("fast", "verify"):
            raise ValueError(f"mode must be 'fast' or 'verify', got {self.mode!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1 slot")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must lie in [0, horizon)")
        if self.frame_cap < 1:
            raise ValueError("frame_cap must be positive")
        BlockShape(self.servers, self.gpus_per_server)  # validates

    @property
    def shape(self) -> BlockShape:
        return BlockShape(self.servers, self.gpus_per_server)

    def rates(self) -> RateMatrix:
        if self.model == MODEL_UNIFORM:
            return rate_matrix_uniform(self.shape, self.r0)
        return rate_matrix_hotspot(self.shape, self.r0)


@dataclass
class FrameState:
    """Where a run stands right before executing one frame."""

    frame: int
    start_slot: int
    backlog: BlockMatrix


@dataclass
class FrameSummary:
    """Per-frame aggregates, filled by the reference path."""

    frame: int
    length: int
    pair_totals: IntMatrix
    out_totals: list[int]
    in_totals: list[int]
    totals_bound: int
    transfers: int


@dataclass
class SimStats:
    frames_observed: int
    mean_frame_length: float
    diverged: bool
    admissible: bool
    total_frames: int
    end_slot: int
    frame_lengths: list[int] | None = None
    summaries: list[FrameSummary] | None = field(default=None, repr=False)


def frame_length(
    backlog: BlockMatrix, balancing: bool
) -> tuple[int, BlockMatrix, Schedule, FrameSummary]:
    """Length, balanced backlog, schedule, and summary for one frame.

    Zero backlog costs one idle slot. Otherwise the length is the slot count
    of the two-tier schedule of the backlog, balanced first (diagonal blocks
    excluded) when ``balancing`` is set.
    """
    n = backlog.shape.servers
    m = backlog.shape.gpus_per_server
    pair_totals = aggregate_servers(backlog)
    out_totals = [sum(pair_totals.row(i)) for i in range(n)]
    in_totals = [sum(pair_totals[i, j] for i in range(n)) for j in range(n)]
    totals_bound = max(
        max(ceil_div(v, m) for v in out_totals),
        max(ceil_div(v, m) for v in in_totals),
    )
    if backlog.data.is_zero():
        idle = Schedule([SubPermutation(backlog.shape.ports)], backlog.data.copy())
        summary = FrameSummary(0, 1, pair_totals, out_totals, in_totals, 0, 0)
        return 1, backlog, idle, summary

    transfers = 0
    if balancing:
        balanced, reports = balance_all_blocks(backlog, skip_diagonal=True)
        transfers = sum(r.total_transfers for r in reports.values())
    else:
        balanced = backlog
    schedule = hier_decompose(balanced)
    length = schedule.slot_count
    summary = FrameSummary(
        0, length, pair_totals, out_totals, in_totals, totals_bound, transfers
    )
    return length, balanced, schedule, summary


def step(
    state: FrameState, config: SimConfig, rates: RateMatrix
) -> tuple[FrameState, FrameSummary]:
    """Execute one frame: size it, then collect the next frame's arrivals."""
    length, _, _, summary = frame_length(state.backlog, config.balancing)
    summary.frame = state.frame
    batch = sample_arrivals(rates, length, StreamKey(config.seed, state.frame))
    nxt = FrameState(
        frame=state.frame + 1,
        start_slot=state.start_slot + length,
        backlog=batch.counts,
    )
    return nxt, summary


def verify_schedule(backlog: BlockMatrix, schedule: Schedule) -> bool:
    """True iff every slot is well formed and the schedule covers the backlog.

    Coverage means the per-entry slot total is at least the backlog entry;
    the simulator's own schedules meet it with equality.
    """
    ports = backlog.shape.ports
    for slot in schedule.slots:
        if slot.size != ports:
            return False
    served = schedule.served_total()
    if served.nrows != ports:
        return False
    return all(
        served[r, c] >= v for r, c, v in backlog.data.iter_entries()
    )


def residual_after(backlog: BlockMatrix, schedule: Schedule) -> IntMatrix:
    """Backlog left unserved: max(0, backlog - slot totals) per entry."""
    served = schedule.served_total()
    out = IntMatrix.zeros(backlog.shape.ports, backlog.shape.ports)
    for r, c, v in backlog.data.iter_entries():
        short = v - served[r, c]
        if short > 0:
            out[r, c] = short
    return out


def _replay_exact(balanced: BlockMatrix, schedule: Schedule, frame: int) -> None:
    """Slot-by-slot replay; raises unless the schedule clears exactly."""
    residual = balanced.data.to_rows()
    for d, slot in enumerate(schedule.slots):
        for r, c in slot.pairs():
            residual[r][c] -= 1
            if residual[r][c] < 0:
                raise ScheduleVerificationError(
                    f"frame {frame}: slot {d} over-serves port pair ({r}, {c})"
                )
    leftovers = sum(v for row in residual for v in row)
    if leftovers:
        raise ScheduleVerificationError(
            f"frame {frame}: {leftovers} packets left after the last slot"
        )


def _run_verify(
    config: SimConfig,
    rates: RateMatrix,
    record_lengths: bool,
    record_summaries: bool,
) -> SimStats:
    state = FrameState(1, 0, BlockMatrix.zeros(config.shape))
    lengths: list[int] = []
    summaries: list[FrameSummary] = []
    observed = 0
    observed_sum = 0
    diverged = False
    while state.start_slot < config.horizon:
        length, balanced, schedule, summary = frame_length(
            state.backlog, config.balancing
        )
        if length > config.frame_cap:
            diverged = True
            break
        summary.frame = state.frame
        _replay_exact(balanced, schedule, state.frame)
        lengths.append(length)
        if record_summaries:
            summaries.append(summary)
        if state.start_slot >= config.warmup and state.start_slot + length <= config.horizon:
            observed += 1
            observed_sum += length
        batch = sample_arrivals(rates, length, StreamKey(config.seed, state.frame))
        state = FrameState(state.frame + 1, state.start_slot + length, batch.counts)
    return SimStats(
        frames_observed=observed,
        mean_frame_length=(observed_sum / observed) if observed else float("nan"),
        diverged=diverged,
        admissible=bool(is_admissible(rates)),
        total_frames=len(lengths),
        end_slot=state.start_slot,
        frame_lengths=lengths if record_lengths else None,
        summaries=summaries if record_summaries else None,
    )


@njit(cache=True)
def _fast_loop(n, m, src, dst, rate, fid, rkey, balancing, horizon, warmup, frame_cap):
    ports = n * m
    backlog = np.zeros((ports, ports), np.int64)
    cap = 1 << 12
    lengths = np.empty(cap, np.int64)
    nflows = src.shape[0]
    tau = np.int64(0)
    fcount = 0
    observed = np.int64(0)
    observed_sum = np.int64(0)
    diverged = False
    f = np.int64(1)
    colsum = np.zeros(m, np.int64)
    delta = np.zeros((n, n), np.int64)
    while tau < horizon:
        # ----- frame length from per-block scales -----
        for i in range(n):
            for j in range(n):
                w = np.int64(0)
                rmax = np.int64(0)
                for k in range(m):
                    colsum[k] = 0
                for l in range(m):
                    rsum = np.int64(0)
                    for k in range(m):
                        v = backlog[i * m + l, j * m + k]
                        rsum += v
                        colsum[k] += v
                    w += rsum
                    if rsum > rmax:
                        rmax = rsum
                cmax = np.int64(0)
                for k in range(m):
                    if colsum[k] > cmax:
                        cmax = colsum[k]
                raw_scale = rmax if rmax > cmax else cmax
                if balancing and i != j:
                    delta[i, j] = (w + m - 1) // m
                else:
                    delta[i, j] = raw_scale
        length = np.int64(0)
        for i in range(n):
            s = np.int64(0)
            for j in range(n):
                s += delta[i, j]
            if s > length:
                length = s
        for j in range(n):
            s = np.int64(0)
            for i in range(n):
                s += delta[i, j]
            if s > length:
                length = s
        if length == 0:
            length = 1
        if length > frame_cap:
            diverged = True
            break
        if fcount == cap:
            cap *= 2
            grown = np.empty(cap, np.int64)
            grown[:fcount] = lengths[:fcount]
            lengths = grown
        lengths[fcount] = length
        fcount += 1
        if tau >= warmup and tau + length <= horizon:
            observed += 1
            observed_sum += length
        # ----- arrivals for the next frame -----
        fkey = _child(rkey, np.uint64(f))
        for q in range(nflows):
            backlog[src[q], dst[q]] = _poisson_one(
                rate[q] * np.float64(length), _child(fkey, fid[q])
            )
        tau += length
        f += 1
    return lengths[:fcount], fcount, observed, observed_sum, diverged, tau


def _run_fast(config: SimConfig, rates: RateMatrix, record_lengths: bool) -> SimStats:
    ports = config.shape.ports
    src, dst = np.nonzero(rates.rates)
    rate_vec = np.ascontiguousarray(rates.rates[src, dst], dtype=np.float64)
    fid = np.ascontiguousarray(
        src.astype(np.uint64) * np.uint64(ports) + dst.astype(np.uint64)
    )
    lengths, total, observed, observed_sum, diverged, end = _fast_loop(
        config.servers,
        config.gpus_per_server,
        np.ascontiguousarray(src, dtype=np.int64),
        np.ascontiguousarray(dst, dtype=np.int64),
        rate_vec,
        fid,
        np.uint64(run_key(config.seed)),
        config.balancing,
        np.int64(config.horizon),
        np.int64(config.warmup),
        np.int64(config.frame_cap),
    )
    return SimStats(
        frames_observed=int(observed),
        mean_frame_length=(int(observed_sum) / int(observed)) if observed else float("nan"),
        diverged=bool(diverged),
        admissible=bool(is_admissible(rates)),
        total_frames=int(total),
        end_slot=int(end),
        frame_lengths=[int(v) for v in lengths] if record_lengths else None,
        summaries=None,
    )


def run(
    config: SimConfig,
    record_lengths: bool = False,
    record_summaries: bool = False,
) -> SimStats:
    """Simulate one configuration to its horizon and aggregate statistics."""
    rates = config.rates()
    if config.mode == "verify":
        return _run_verify(config, rates, record_lengths, record_summaries)
    if record_summaries:
        raise ValueError("per-frame summaries need mode='verify'")
    return _run_fast(config, rates, record_lengths)


def _run_for_pool(config: SimConfig) -> SimStats:
    return run(config)


def run_many(configs: list[SimConfig], max_workers: int | None = None) -> list[SimStats]:
    """Run a batch of configurations, results in input order.

    Each run's randomness is keyed by its own config, so splitting the batch
    across processes cannot change any result.
    """
    if max_workers is None:
        max_workers = os.cpu_count() or 1
    if max_workers <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_run_for_pool, configs))


__all__ = [
    "MODEL_UNIFORM",
    "MODEL_HOTSPOT",
    "DEFAULT_FRAME_CAP",
    "ScheduleVerificationError",
    "SimConfig",
    "FrameState",
    "FrameSummary",
    "SimStats",
    "frame_length",
    "step",
    "verify_schedule",
    "residual_after",
    "run",
    "run_many",
]
