"""Decomposition of integer matrices into subpermutation slots.

A square nonnegative integer matrix whose row and column sums are all at most
some scale D can be written as a sum of at most D subpermutation matrices.
This module makes that constructive and deterministic:

  1. pad the matrix with dummy units until every row and column sums to
     exactly D (pad_to_regular),
  2. repeatedly extract a perfect matching from the support of the padded
     remainder and subtract one unit along it,
  3. emit only the real (non-dummy) units of each matching as a slot.

Determinism contract: the padding pairs the lowest-index deficient row with
the lowest-index deficient column; matching extraction seats rows in
ascending index, tries candidate columns in ascending index, and repairs the
remaining rows with ascending-order augmenting paths. Reruns are identical.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matrixcore import (
    DimensionError,
    IntMatrix,
    SubPermutation,
    col_sums,
    row_sums,
    scale_of,
)


class InfeasibleScaleError(ValueError):
    """Requested scale is smaller than some row or column sum."""


@dataclass
class BvnResult:
    """Outcome of decompose().

    parts holds the slots in extraction order with trailing all-zero slots
    removed; interior all-zero slots (a matching that consumed only padding)
    are kept so slot indices stay meaningful. count is the number of nonzero
    parts and scale_used the scale the extraction ran at, so
    count <= len(parts) <= scale_used.
    """

    parts: list[SubPermutation]
    count: int
    scale_used: int


def pad_to_regular(x: IntMatrix, scale: int) -> IntMatrix:
    """Dummy matrix D such that x + D has every row and column sum == scale.

    Greedy northwest-style fill: repeatedly add min(row deficiency, column
    deficiency) at the lowest-index deficient row and column.
    """
    if x.nrows != x.ncols:
        raise DimensionError("padding needs a square matrix")
    rdef = [scale - v for v in row_sums(x)]
    cdef = [scale - v for v in col_sums(x)]
    if min(rdef) < 0 or min(cdef) < 0:
        raise InfeasibleScaleError(
            f"scale {scale} below max row/col sum {scale_of(x)}"
        )
    n = x.nrows
    d = IntMatrix.zeros(n, n)
    r = 0
    c = 0
    while True:
        while r < n and rdef[r] == 0:
            r += 1
        while c < n and cdef[c] == 0:
            c += 1
        if r == n or c == n:
            break
        t = min(rdef[r], cdef[c])
        d.add_at(r, c, t)
        rdef[r] -= t
        cdef[c] -= t
    # Row and column deficiencies have equal totals, so both run out together.
    assert all(v == 0 for v in rdef) and all(v == 0 for v in cdef)
    return d


def _augment(r: int, adj: list[list[int]], match_row: list[int],
             match_col: list[int], visited: list[bool]) -> bool:
    for c in adj[r]:
        if visited[c]:
            continue
        visited[c] = True
        if match_col[c] == -1 or _augment(match_col[c], adj, match_row, match_col, visited):
            match_row[r] = c
            match_col[c] = r
            return True
    return False


def _perfect_matching(adj: list[list[int]]) -> list[int]:
    """Perfect matching on the bipartite support graph, deterministic order.

    Greedy seating first (each row takes its lowest-index free column), then
    augmenting-path repair for rows left unseated. The caller guarantees a
    perfect matching exists (regular remainder), so failure is an internal
    error.
    """
    n = len(adj)
    match_row = [-1] * n
    match_col = [-1] * n
    for r in range(n):
        for c in adj[r]:
            if match_col[c] == -1:
                match_row[r] = c
                match_col[c] = r
                break
    for r in range(n):
        if match_row[r] != -1:
            continue
        visited = [False] * n
        if not _augment(r, adj, match_row, match_col, visited):
            raise AssertionError("regular remainder lost its perfect matching")
    return match_row


def decompose(x: IntMatrix, scale: int | None = None) -> BvnResult:
    """Split x into subpermutation slots; see the module docstring.

    scale defaults to the tight value (the largest row or column sum).
    Passing a larger scale is allowed and pads more; passing a smaller one
    raises InfeasibleScaleError.
    """
    if x.nrows != x.ncols:
        raise DimensionError("decompose needs a square matrix")
    tight = scale_of(x)
    if scale is None:
        scale = tight
    elif scale < tight:
        raise InfeasibleScaleError(f"scale {scale} below max row/col sum {tight}")
    n = x.nrows
    real = x.to_rows()
    dummy = pad_to_regular(x, scale).to_rows()
    adj: list[list[int]] = [
        [c for c in range(n) if real[r][c] + dummy[r][c] > 0] for r in range(n)
    ]
    parts: list[SubPermutation] = []
    for _ in range(scale):
        match_row = _perfect_matching(adj)
        pairs: list[tuple[int, int]] = []
        for r, c in enumerate(match_row):
            # Prefer consuming a real unit; dummies only cover the shortfall.
            if real[r][c] > 0:
                real[r][c] -= 1
                pairs.append((r, c))
            else:
                dummy[r][c] -= 1
            if real[r][c] + dummy[r][c] == 0:
                adj[r].remove(c)
        parts.append(SubPermutation(n, pairs))
    assert all(v == 0 for row in real for v in row)
    assert all(v == 0 for row in dummy for v in row)
    while parts and len(parts[-1]) == 0:
        parts.pop()
    count = sum(1 for p in parts if len(p) > 0)
    return BvnResult(parts=parts, count=count, scale_used=scale)


__all__ = ["BvnResult", "InfeasibleScaleError", "pad_to_regular", "decompose"]
