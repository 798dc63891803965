"""Evening out traffic inside a server block by unit transfers.

A block with total W on an m x m port grid can always be rearranged so every
row and column sums to at most B = ceil(W / m), and B is the best possible
uniform bound. Two phases of single-unit moves get there:

  phase 1 (column transfers): while some row sums above B, move one unit
    from the smallest-index overloaded row to the smallest-index row still
    below B, staying inside the smallest-index nonempty column of the donor
    row. Column sums never change.
  phase 2 (row transfers): the mirror image on columns. Row sums never
    change, so phase 1's guarantee survives.

Every phase-1 move lowers sum(max(0, row_sum - B)) by exactly one and every
phase-2 move lowers the column counterpart by exactly one, which both proves
termination and pins the exact transfer counts reported.

The smallest-index choices make the result a pure function of the input.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matrixcore import BlockMatrix, DimensionError, IntMatrix, ceil_div

# Trace entries, only built on request:
#   ("col", donor_row, receiver_row, column)  phase-1 move
#   ("row", donor_col, receiver_col, row)     phase-2 move
Transfer = tuple[str, int, int, int]


@dataclass
class BalanceReport:
    """What balancing one block did: the bound hit and the work done."""

    bound: int
    phase1_transfers: int
    phase2_transfers: int
    trace: list[Transfer] | None = None

    @property
    def total_transfers(self) -> int:
        return self.phase1_transfers + self.phase2_transfers


def balance_block(x: IntMatrix, record_trace: bool = False) -> tuple[IntMatrix, BalanceReport]:
    """Balanced copy of one square block plus a report. Input is untouched."""
    if x.nrows != x.ncols:
        raise DimensionError("balance_block needs a square block")
    m = x.nrows
    work = x.to_rows()
    total = sum(sum(r) for r in work)
    bound = ceil_div(total, m)
    rsum = [sum(r) for r in work]
    csum = [sum(work[l][k] for l in range(m)) for k in range(m)]
    trace: list[Transfer] | None = [] if record_trace else None

    phase1 = 0
    while True:
        donor = next((l for l in range(m) if rsum[l] > bound), None)
        if donor is None:
            break
        receiver = next(l for l in range(m) if rsum[l] < bound)
        column = next(k for k in range(m) if work[donor][k] >= 1)
        work[donor][column] -= 1
        work[receiver][column] += 1
        rsum[donor] -= 1
        rsum[receiver] += 1
        phase1 += 1
        if trace is not None:
            trace.append(("col", donor, receiver, column))

    phase2 = 0
    while True:
        donor = next((k for k in range(m) if csum[k] > bound), None)
        if donor is None:
            break
        receiver = next(k for k in range(m) if csum[k] < bound)
        row = next(l for l in range(m) if work[l][donor] >= 1)
        work[row][donor] -= 1
        work[row][receiver] += 1
        csum[donor] -= 1
        csum[receiver] += 1
        phase2 += 1
        if trace is not None:
            trace.append(("row", donor, receiver, row))

    report = BalanceReport(
        bound=bound, phase1_transfers=phase1, phase2_transfers=phase2, trace=trace
    )
    return IntMatrix(work), report


def balance_all_blocks(
    x: BlockMatrix, skip_diagonal: bool = False
) -> tuple[BlockMatrix, dict[tuple[int, int], BalanceReport]]:
    """Balance every block of a blocked matrix independently.

    With skip_diagonal the (i, i) blocks pass through untouched, which is
    what the simulator wants since its demand never targets a block's own
    server. Returns the new matrix and a report per processed block.
    """
    n = x.shape.servers
    out = x.copy()
    reports: dict[tuple[int, int], BalanceReport] = {}
    for i in range(n):
        for j in range(n):
            if skip_diagonal and i == j:
                continue
            balanced, rep = balance_block(x.block(i, j))
            out.set_block(i, j, balanced)
            reports[(i, j)] = rep
    return out, reports


__all__ = ["BalanceReport", "Transfer", "balance_block", "balance_all_blocks"]
