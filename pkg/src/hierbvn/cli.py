"""Command line front end.

Subcommands:

  decompose   matrix file -> two-tier schedule (optionally balanced first)
  balance     matrix file -> balanced matrix plus a transfer report
  simulate    parameter sweep -> CSV, one row per (r0, balancing, seed)
  verify      matrix file + schedule file -> coverage check

Data goes to stdout or ``--out``; human-readable reports go to stderr, so
piping the data never picks up commentary. Exit codes: 0 success, 1 bad
input or usage, 2 verification failed, 3 divergence under ``--strict``.

Matrix files: header line ``n m``, then n*m rows of n*m integers.

Schedule files: header line ``ports slot_count``, then one line per slot,
``d: r>c r>c ...`` with 0-based port indices. A slot that serves nothing is
written bare (``d:``).

``simulate`` reads defaults from an optional ``key=value`` config file
(flags win over the file). Seeds resolve in order: ``--seeds``, the config
file, the HIERBVN_SEED environment variable, then 1..5. The CSV is written
deterministically: rows sorted by (r0, balancing, seed), floats rendered
with repr, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import os
import sys

from .balancing import balance_all_blocks
from .bvn import decompose as bvn_decompose
from .hierarchical import hier_decompose
from .matrixcore import (
    BlockMatrix,
    BlockShape,
    DimensionError,
    EntryRangeError,
    MatrixParseError,
    Schedule,
    SubPermutation,
    col_sums,
    parse_matrix_text,
    render_matrix_text,
    row_sums,
)
from .sim import DEFAULT_FRAME_CAP, SimConfig, residual_after, run_many, verify_schedule

DEFAULT_SEEDS = (1, 2, 3, 4, 5)
SEED_ENV_VAR = "HIERBVN_SEED"
CSV_HEADER = "model,r0,balancing,seed,n,m,frames_observed,mean_frame_length,diverged"


class ScheduleParseError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


# ------------------------------------------------------------ file formats


def render_schedule_text(schedule: Schedule) -> str:
    lines = [f"{schedule.source_total.nrows} {schedule.slot_count}"]
    for d, slot in enumerate(schedule.slots):
        body = " ".join(f"{r}>{c}" for r, c in slot.pairs())
        lines.append(f"{d}: {body}".rstrip())
    return "\n".join(lines) + "\n"


def parse_schedule_text(text: str) -> tuple[int, list[SubPermutation]]:
    """Returns (ports, slots). Raises ScheduleParseError on malformed input
    and ValueError when a slot repeats a row or column."""
    numbered = [
        (i + 1, ln.strip()) for i, ln in enumerate(text.splitlines()) if ln.strip()
    ]
    if not numbered:
        raise ScheduleParseError("empty input", 1)
    head_no, head = numbered[0]
    parts = head.split()
    try:
        ports, slot_count = (int(p) for p in parts)
    except (TypeError, ValueError):
        raise ScheduleParseError("header must be two integers: ports slots", head_no)
    if ports < 1 or slot_count < 0:
        raise ScheduleParseError("ports must be >= 1 and slots >= 0", head_no)
    body = numbered[1:]
    if len(body) != slot_count:
        raise ScheduleParseError(
            f"expected {slot_count} slot lines, found {len(body)}", head_no
        )
    slots = []
    for d, (no, ln) in enumerate(body):
        label, _, rest = ln.partition(":")
        if not _ or not label.strip().isdigit() or int(label) != d:
            raise ScheduleParseError(f"expected slot label '{d}:'", no)
        pairs = []
        for tok in rest.split():
            r, sep, c = tok.partition(">")
            if not sep or not r.isdigit() or not c.isdigit():
                raise ScheduleParseError(f"bad pair {tok!r}, expected r>c", no)
            pairs.append((int(r), int(c)))
        try:
            slots.append(SubPermutation(ports, pairs))
        except (ValueError, DimensionError) as e:
            raise ScheduleParseError(f"slot {d} is not a subpermutation: {e}", no)
    return ports, slots


def _read_config(path: str) -> dict[str, str]:
    known = {
        "model", "n", "m", "r0", "r0_grid", "seeds",
        "balancing", "horizon", "warmup", "mode", "frame_cap",
    }
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not key or not value:
                raise ValueError(f"{path}:{no}: expected key=value")
            if key not in known:
                raise ValueError(f"{path}:{no}: unknown config key {key!r}")
            out[key] = value
    return out


def _expand_grid(spec: str) -> list[float]:
    try:
        lo, hi, stp = (float(p) for p in spec.split(":"))
    except (TypeError, ValueError):
        raise ValueError(f"grid must be 'start:stop:step', got {spec!r}")
    if stp <= 0 or hi < lo:
        raise ValueError(f"grid needs step > 0 and stop >= start, got {spec!r}")
    vals = []
    k = 0
    while True:
        v = round(lo + k * stp, 10)
        if v > hi + stp * 1e-9:
            break
        vals.append(v)
        k += 1
    return vals


def _parse_seeds(spec: str) -> list[int]:
    try:
        return [int(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"seeds must be comma-separated integers, got {spec!r}")


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_matrix(path: str) -> BlockMatrix:
    with open(path, encoding="utf-8") as fh:
        return parse_matrix_text(fh.read())


# ------------------------------------------------------------- subcommands


def cmd_decompose(args: argparse.Namespace) -> int:
    x = _load_matrix(args.matrix)
    note = ""
    if args.balance:
        x, reports = balance_all_blocks(x, skip_diagonal=args.skip_diagonal)
        moved = sum(r.total_transfers for r in reports.values())
        note = f", balanced with {moved} transfers"
    if args.flat:
        result = bvn_decompose(x.data)
        schedule = Schedule(result.parts, x.data.copy())
        kind = "flat"
    else:
        schedule = hier_decompose(x)
        kind = "two-tier"
    ok = schedule.reconstructs_source()
    _emit(render_schedule_text(schedule), args.out)
    print(
        f"{x.shape.servers} servers x {x.shape.gpus_per_server} GPUs, "
        f"{x.data.total()} units -> {schedule.slot_count} {kind} slots"
        f"{note}, reconstruction {'exact' if ok else 'FAILED'}",
        file=sys.stderr,
    )
    return 0 if ok else 2


def cmd_balance(args: argparse.Namespace) -> int:
    x = _load_matrix(args.matrix)
    if args.m is not None:
        ports = x.shape.ports
        if args.m < 1 or ports % args.m:
            raise ValueError(f"--m must divide the port count {ports}")
        x = BlockMatrix(BlockShape(ports // args.m, args.m), x.data)
    balanced, reports = balance_all_blocks(x, skip_diagonal=args.skip_diagonal)
    _emit(render_matrix_text(balanced), args.out)
    total = 0
    for (i, j), rep in sorted(reports.items()):
        total += rep.total_transfers
        if rep.total_transfers:
            before = x.block(i, j)
            after = balanced.block(i, j)
            print(
                f"block ({i},{j}): bound {rep.bound}, "
                f"{rep.phase1_transfers}+{rep.phase2_transfers} transfers, "
                f"rows {row_sums(before)} -> {row_sums(after)}, "
                f"cols {col_sums(before)} -> {col_sums(after)}",
                file=sys.stderr,
            )
    print(f"total transfers: {total}", file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    x = _load_matrix(args.matrix)
    with open(args.schedule, encoding="utf-8") as fh:
        try:
            ports, slots = parse_schedule_text(fh.read())
        except ValueError as e:
            print(f"invalid schedule: {e}")
            return 2
    if ports != x.shape.ports:
        print(f"invalid schedule: {ports} ports, matrix has {x.shape.ports}")
        return 2
    schedule = Schedule(slots, x.data.copy())
    ok = verify_schedule(x, schedule)
    print(f"slots: {schedule.slot_count}")
    print(f"coverage: {'PASS' if ok else 'FAIL'}")
    if ok:
        return 0
    left = residual_after(x, schedule)
    print(f"residual total: {left.total()}")
    shown = 0
    for r, c, v in left.iter_entries():
        if v and shown < 20:
            print(f"  port {r} -> {c}: {v} short")
            shown += 1
    return 2


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _read_config(args.config) if args.config else {}

    def pick(flag, key, conv, default):
        if flag is not None:
            return flag
        if key in cfg:
            return conv(cfg[key])
        return default

    n = pick(args.n, "n", int, 8)
    m = pick(args.m, "m", int, 2)
    model = pick(args.model, "model", str, "U")
    if model not in ("U", "NU"):
        raise ValueError(f"model must be U or NU, got {model!r}")
    balancing = pick(args.balancing, "balancing", str, "on")
    if balancing not in ("on", "off", "both"):
        raise ValueError(f"balancing must be on, off, or both, got {balancing!r}")
    horizon = pick(args.horizon, "horizon", int, 100_000)
    warmup = pick(args.warmup, "warmup", int, horizon // 10)
    mode = pick(args.mode, "mode", str, "fast")
    frame_cap = pick(args.frame_cap, "frame_cap", int, DEFAULT_FRAME_CAP)

    if args.r0 is not None:
        r0_list = [args.r0]
    elif args.r0_grid is not None:
        r0_list = _expand_grid(args.r0_grid)
    elif "r0" in cfg:
        r0_list = [float(cfg["r0"])]
    elif "r0_grid" in cfg:
        r0_list = _expand_grid(cfg["r0_grid"])
    else:
        raise ValueError("one of --r0 / --r0-grid is required (flag or config file)")

    if args.seeds is not None:
        seeds = _parse_seeds(args.seeds)
    elif "seeds" in cfg:
        seeds = _parse_seeds(cfg["seeds"])
    elif os.environ.get(SEED_ENV_VAR):
        seeds = [int(os.environ[SEED_ENV_VAR])]
    else:
        seeds = list(DEFAULT_SEEDS)
    seeds = sorted(set(seeds))

    bal_options = {"on": [True], "off": [False], "both": [False, True]}[balancing]
    configs = [
        SimConfig(
            servers=n, gpus_per_server=m, model=model, r0=r0,
            horizon=horizon, warmup=warmup, seed=seed,
            balancing=bal, mode=mode, frame_cap=frame_cap,
        )
        for r0 in sorted(r0_list)
        for bal in bal_options
        for seed in seeds
    ]
    results = run_many(configs, max_workers=args.workers)

    lines = [CSV_HEADER]
    diverged = 0
    for c, s in zip(configs, results):
        diverged += s.diverged
        lines.append(
            f"{c.model},{c.r0!r},{'on' if c.balancing else 'off'},{c.seed},"
            f"{c.servers},{c.gpus_per_server},"
            f"{s.frames_observed},{s.mean_frame_length!r},{int(s.diverged)}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    where = args.out if args.out else "stdout"
    print(f"{len(results)} runs -> {where}, {diverged} diverged", file=sys.stderr)
    if diverged and args.strict:
        return 3
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="hierbvn",
        description="Two-tier crossbar scheduling tools.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="schedule a matrix file")
    p.add_argument("matrix", help="matrix file (header: n m)")
    g = p.add_mutually_exclusive_group()
    g.add_argument(
        "--hierarchical", dest="flat", action="store_false",
        help="two-tier block decomposition (default)",
    )
    g.add_argument(
        "--flat", dest="flat", action="store_true",
        help="single-level decomposition, ignoring block structure",
    )
    p.set_defaults(flat=False)
    p.add_argument("--balance", action="store_true", help="balance blocks first")
    p.add_argument(
        "--skip-diagonal", action="store_true",
        help="with --balance, leave diagonal blocks untouched",
    )
    p.add_argument("--out", help="write the schedule here instead of stdout")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("balance", help="balance each block of a matrix file")
    p.add_argument("matrix")
    p.add_argument("--m", type=int, help="reinterpret the block size")
    p.add_argument("--skip-diagonal", action="store_true")
    p.add_argument("--out", help="write the balanced matrix here instead of stdout")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("verify", help="check a schedule file against a matrix file")
    p.add_argument("matrix")
    p.add_argument("schedule")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="sweep the frame simulator, emit CSV")
    p.add_argument("--config", help="key=value defaults file (flags win)")
    p.add_argument("--model", choices=["U", "NU"])
    p.add_argument("--n", type=int, help="servers (default 8)")
    p.add_argument("--m", type=int, help="GPUs per server (default 2)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--r0", type=float, help="single per-flow rate")
    g.add_argument("--r0-grid", help="rate grid start:stop:step, inclusive")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--balancing", choices=["on", "off", "both"])
    p.add_argument("--horizon", type=int, help="slots to simulate (default 100000)")
    p.add_argument("--warmup", type=int, help="slots to discard (default horizon/10)")
    p.add_argument("--mode", choices=["fast", "verify"])
    p.add_argument("--frame-cap", type=int, help="divergence threshold on frame length")
    p.add_argument("--workers", type=int, help="parallel runs (default: CPU count)")
    p.add_argument("--strict", action="store_true", help="exit 3 if any run diverged")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    return top


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, but 2 means "verification
        # failed" here; fold usage problems into the bad-input code.
        return 1 if e.code == 2 else (e.code or 0)
    try:
        return args.func(args)
    except (MatrixParseError, DimensionError, EntryRangeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
