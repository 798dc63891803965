"""Simulator tests.

The strongest oracle here is cross-implementation agreement: verify mode
builds and replays every schedule in pure python, fast mode runs compiled
scale arithmetic, and the two must produce bit-identical frame sequences.
Window accounting is re-derived in the tests from raw length sequences.
"""

import math

import pytest

from hierbvn.hierarchical import hier_decompose
from hierbvn.matrixcore import BlockMatrix, BlockShape, IntMatrix, Schedule
from hierbvn.sim import (
    FrameState,
    ScheduleVerificationError,
    SimConfig,
    _replay_exact,
    frame_length,
    residual_after,
    run,
    run_many,
    step,
    verify_schedule,
)

# ---------------------------------------------------------------- helpers


def _stats_equal(a, b):
    assert a.frames_observed == b.frames_observed
    assert a.diverged == b.diverged
    assert a.admissible == b.admissible
    assert a.total_frames == b.total_frames
    assert a.end_slot == b.end_slot
    assert a.frame_lengths == b.frame_lengths
    if math.isnan(a.mean_frame_length):
        assert math.isnan(b.mean_frame_length)
    else:
        assert a.mean_frame_length == b.mean_frame_length


def _window_stats(lengths, warmup, horizon):
    tau = 0
    observed = 0
    total = 0
    for length in lengths:
        if tau >= warmup and tau + length <= horizon:
            observed += 1
            total += length
    # note: tau must advance inside the loop
        tau += length
    return observed, total


def _demo_backlog():
    shape = BlockShape(3, 2)
    x = BlockMatrix.zeros(shape)
    vals = [
        (0, 2, 2), (0, 3, 1), (1, 2, 1), (1, 3, 2),
        (2, 4, 3), (3, 5, 3),
        (4, 0, 1), (4, 1, 1), (5, 0, 2), (5, 1, 1),
    ]
    for r, c, v in vals:
        x.data[r, c] = v
    return x


# --------------------------------------------------- fast == verify


EQUIV_CASES = [
    ("U", 0.15, True, 1_000_000),
    ("U", 0.15, False, 1_000_000),
    ("NU", 0.15, True, 1_000_000),
    ("NU", 0.15, False, 1_000_000),
    ("U", 5.0, True, 50),       # overloaded, hits the frame cap
    ("NU", 5.0, False, 50),
]


@pytest.mark.parametrize("model,r0,balancing,cap", EQUIV_CASES)
def test_fast_matches_verify(model, r0, balancing, cap):
    kw = dict(
        servers=3, gpus_per_server=2, model=model, r0=r0,
        horizon=600, warmup=100, seed=7, balancing=balancing, frame_cap=cap,
    )
    fast = run(SimConfig(mode="fast", **kw), record_lengths=True)
    slow = run(SimConfig(mode="verify", **kw), record_lengths=True)
    _stats_equal(fast, slow)
    if cap == 50:
        assert fast.diverged
    else:
        assert not fast.diverged
        assert fast.frames_observed > 0


def test_window_accounting_recomputed_from_lengths():
    cfg = SimConfig(
        servers=3, gpus_per_server=2, model="U", r0=0.12,
        horizon=800, warmup=150, seed=11, balancing=True,
    )
    stats = run(cfg, record_lengths=True)
    observed, total = _window_stats(stats.frame_lengths, cfg.warmup, cfg.horizon)
    assert stats.frames_observed == observed
    assert stats.mean_frame_length == total / observed
    assert stats.total_frames == len(stats.frame_lengths)
    assert stats.end_slot == sum(stats.frame_lengths)
    assert stats.end_slot >= cfg.horizon
    assert stats.frame_lengths[0] == 1  # nothing queued before the first frame


def test_zero_rate_runs_idle():
    for mode in ("fast", "verify"):
        stats = run(
            SimConfig(
                servers=2, gpus_per_server=2, model="U", r0=0.0,
                horizon=50, warmup=10, seed=3, balancing=True, mode=mode,
            ),
            record_lengths=True,
        )
        assert stats.frame_lengths == [1] * 50
        assert stats.frames_observed == 40
        assert stats.mean_frame_length == 1.0
        assert stats.admissible
        assert not stats.diverged


def test_divergence_reports_and_stops():
    stats = run(
        SimConfig(
            servers=3, gpus_per_server=2, model="U", r0=5.0,
            horizon=10_000, warmup=0, seed=1, balancing=True, frame_cap=40,
        ),
        record_lengths=True,
    )
    assert stats.diverged
    assert not stats.admissible
    assert stats.end_slot < 10_000
    assert stats.total_frames == len(stats.frame_lengths)
    assert all(v <= 40 for v in stats.frame_lengths)


def test_balanced_length_between_bounds():
    cfg = SimConfig(
        servers=4, gpus_per_server=2, model="NU", r0=0.08,
        horizon=400, warmup=0, seed=5, balancing=True, mode="verify",
    )
    stats = run(cfg, record_summaries=True)
    assert stats.summaries
    for s in stats.summaries:
        assert s.totals_bound <= s.length <= s.totals_bound + cfg.servers - 1


def test_unbalanced_length_at_least_bound():
    cfg = SimConfig(
        servers=4, gpus_per_server=2, model="NU", r0=0.08,
        horizon=400, warmup=0, seed=5, balancing=False, mode="verify",
    )
    stats = run(cfg, record_summaries=True)
    assert any(s.length > s.totals_bound + cfg.servers - 1 for s in stats.summaries)
    for s in stats.summaries:
        assert s.length >= s.totals_bound


def test_step_composes_to_run():
    cfg = SimConfig(
        servers=3, gpus_per_server=2, model="U", r0=0.1,
        horizon=120, warmup=0, seed=9, balancing=True,
    )
    rates = cfg.rates()
    state = FrameState(1, 0, BlockMatrix.zeros(cfg.shape))
    lengths = []
    while state.start_slot < cfg.horizon:
        state, summary = step(state, cfg, rates)
        lengths.append(summary.length)
    stats = run(cfg, record_lengths=True)
    assert lengths == stats.frame_lengths


def test_frame_length_zero_backlog_idles():
    empty = BlockMatrix.zeros(BlockShape(3, 2))
    length, balanced, schedule, summary = frame_length(empty, True)
    assert length == 1
    assert schedule.slot_count == 1
    assert schedule.slots[0].size == 6 and not list(schedule.slots[0].pairs())
    assert summary.totals_bound == 0
    assert balanced is empty


def test_verify_schedule_and_residual():
    x = _demo_backlog()
    sched = hier_decompose(x)
    assert verify_schedule(x, sched)
    assert residual_after(x, sched).is_zero()

    # drop the last slot: exactly its pairs go missing, one unit each
    dropped = sched.slots[-1]
    clipped = Schedule(sched.slots[:-1], x.data.copy())
    assert not verify_schedule(x, clipped)
    left = residual_after(x, clipped)
    assert left.total() == len(list(dropped.pairs()))
    for r, c in dropped.pairs():
        assert left[r, c] >= 1


def test_replay_rejects_corruption():
    x = _demo_backlog()
    sched = hier_decompose(x)
    clipped = Schedule(sched.slots[:-1], x.data.copy())
    with pytest.raises(ScheduleVerificationError, match="left after"):
        _replay_exact(x, clipped, frame=4)
    padded = Schedule(list(sched.slots) + [sched.slots[0]], x.data.copy())
    with pytest.raises(ScheduleVerificationError, match="over-serves"):
        _replay_exact(x, padded, frame=4)


def test_summaries_need_verify_mode():
    cfg = SimConfig(
        servers=2, gpus_per_server=2, model="U", r0=0.1,
        horizon=10, warmup=0, seed=1, balancing=True, mode="fast",
    )
    with pytest.raises(ValueError):
        run(cfg, record_summaries=True)


def test_config_validation():
    good = dict(
        servers=2, gpus_per_server=2, model="U", r0=0.1,
        horizon=10, warmup=0, seed=1, balancing=True,
    )
    SimConfig(**good)
    for bad in (
        dict(good, model="X"),
        dict(good, mode="slow"),
        dict(good, horizon=0),
        dict(good, warmup=11),
        dict(good, warmup=10),  # warmup must leave room to observe
        dict(good, frame_cap=0),
    ):
        with pytest.raises(ValueError):
            SimConfig(**bad)


def test_run_many_matches_serial_order():
    configs = [
        SimConfig(
            servers=2, gpus_per_server=2, model="U", r0=r0,
            horizon=300, warmup=50, seed=s, balancing=True,
        )
        for r0 in (0.05, 0.15)
        for s in (1, 2)
    ]
    serial = run_many(configs, max_workers=1)
    pooled = run_many(configs, max_workers=2)
    for a, b in zip(serial, pooled):
        _stats_equal(a, b)
    again = [run(c) for c in configs]
    for a, b in zip(serial, again):
        _stats_equal(a, b)
