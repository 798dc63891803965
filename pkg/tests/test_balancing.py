import random

import pytest

from hierbvn.balancing import balance_all_blocks, balance_block
from hierbvn.matrixcore import (
    BlockMatrix,
    BlockShape,
    DimensionError,
    IntMatrix,
    ceil_div,
    col_sums,
    row_sums,
)


def overload(sums, bound):
    return sum(max(0, s - bound) for s in sums)


def test_worked_example():
    # Hand-worked: [[3,1],[0,0]], total 4, bound 2.
    # Phase 1 moves two units down column 0: [[1,1],[2,0]].
    # Phase 2 moves one unit of row 0 from column 0 to 1: [[0,2],[2,0]].
    x = IntMatrix([[3, 1], [0, 0]])
    balanced, rep = balance_block(x)
    assert balanced == IntMatrix([[0, 2], [2, 0]])
    assert rep.bound == 2
    assert rep.phase1_transfers == 2
    assert rep.phase2_transfers == 1
    assert x == IntMatrix([[3, 1], [0, 0]])  # input untouched


def test_already_balanced_is_noop():
    x = IntMatrix([[1, 0], [0, 1]])
    balanced, rep = balance_block(x)
    assert balanced == x
    assert rep.phase1_transfers == 0 and rep.phase2_transfers == 0


def test_zero_block():
    x = IntMatrix.zeros(3, 3)
    balanced, rep = balance_block(x)
    assert balanced == x and rep.bound == 0
    assert rep.total_transfers == 0


def test_single_port_block():
    balanced, rep = balance_block(IntMatrix([[7]]))
    assert balanced == IntMatrix([[7]]) and rep.bound == 7
    assert rep.total_transfers == 0


def test_non_square_rejected():
    with pytest.raises(DimensionError):
        balance_block(IntMatrix.zeros(2, 3))


def test_transfer_counts_equal_initial_overloads():
    rng = random.Random(8311)
    for _ in range(400):
        m = rng.randint(1, 6)
        x = IntMatrix([[rng.randrange(21) for _ in range(m)] for _ in range(m)])
        bound = ceil_div(x.total(), m) if x.total() else 0
        want_p1 = overload(row_sums(x), bound)
        want_p2 = overload(col_sums(x), bound)
        balanced, rep = balance_block(x)
        assert rep.bound == bound
        assert rep.phase1_transfers == want_p1
        assert rep.phase2_transfers == want_p2
        assert balanced.total() == x.total()
        assert max(row_sums(balanced)) <= bound or x.total() == 0
        assert max(col_sums(balanced)) <= bound or x.total() == 0


def test_trace_replays_with_nonnegative_intermediates():
    rng = random.Random(99)
    for _ in range(50):
        m = rng.randint(2, 5)
        x = IntMatrix([[rng.randrange(15) for _ in range(m)] for _ in range(m)])
        balanced, rep = balance_block(x, record_trace=True)
        work = x.to_rows()
        for kind, donor, receiver, lane in rep.trace:
            if kind == "col":
                work[donor][lane] -= 1
                work[receiver][lane] += 1
            else:
                work[lane][donor] -= 1
                work[lane][receiver] += 1
            for row in work:
                for v in row:
                    assert v >= 0 and isinstance(v, int)
        assert IntMatrix(work) == balanced
        assert len(rep.trace) == rep.total_transfers


def test_phase1_preserves_column_sums_phase2_preserves_row_sums():
    x = IntMatrix([[9, 0, 0], [0, 0, 0], [1, 1, 1]])
    balanced, rep = balance_block(x, record_trace=True)
    work = x.to_rows()
    for kind, donor, receiver, lane in rep.trace:
        before_cols = [sum(work[l][k] for l in range(3)) for k in range(3)]
        before_rows = [sum(r) for r in work]
        if kind == "col":
            work[donor][lane] -= 1
            work[receiver][lane] += 1
            assert [sum(work[l][k] for l in range(3)) for k in range(3)] == before_cols
        else:
            work[lane][donor] -= 1
            work[lane][receiver] += 1
            assert [sum(r) for r in work] == before_rows


def test_deterministic():
    x = IntMatrix([[5, 0, 2], [0, 0, 0], [0, 7, 0]])
    a, ra = balance_block(x)
    b, rb = balance_block(x.copy())
    assert a == b
    assert (ra.bound, ra.phase1_transfers, ra.phase2_transfers) == (
        rb.bound,
        rb.phase1_transfers,
        rb.phase2_transfers,
    )


def test_balance_all_blocks_skip_diagonal():
    shape = BlockShape(2, 2)
    bm = BlockMatrix.zeros(shape)
    hot = IntMatrix([[3, 1], [0, 0]])
    bm.set_block(0, 0, hot)
    bm.set_block(0, 1, hot)
    out, reports = balance_all_blocks(bm, skip_diagonal=True)
    assert out.block(0, 0) == hot  # untouched
    assert out.block(0, 1) == IntMatrix([[0, 2], [2, 0]])
    assert (0, 0) not in reports and (0, 1) in reports
    assert reports[(0, 1)].total_transfers == 3

    out2, reports2 = balance_all_blocks(bm, skip_diagonal=False)
    assert out2.block(0, 0) == IntMatrix([[0, 2], [2, 0]])
    assert (0, 0) in reports2
    # source untouched either way
    assert bm.block(0, 0) == hot
