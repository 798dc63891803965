"""Two-tier schedule construction for blocked crossbar matrices.

The flat decomposition in bvn.py ignores structure. For an n-server cluster
with m ports per server, the two-tier construction does better bookkeeping:

  1. decompose every m x m block on its own, at its own tight scale,
  2. form the n x n matrix of those per-block scales and decompose *it*,
     which hands every block an explicit set of global slot indices,
  3. drop each block's r-th sub-slot into the r-th global slot it was given.

Step 2 guarantees that within one global slot a server carries at most one
block in each direction, so the assembled port-level slots stay
subpermutations. The total slot count equals the scale of the per-block
scale matrix: the max over servers of summed per-block scales.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import bvn
from .matrixcore import (
    BlockMatrix,
    IntMatrix,
    Schedule,
    SubPermutation,
    scale_of,
)


@dataclass
class BlockScales:
    """Per-block tight scales plus their overall schedule length.

    per_block[i, j] is the scale of block (i, j); overall is the largest
    row or column sum of per_block, which is exactly how many global slots
    the two-tier schedule uses.
    """

    per_block: IntMatrix
    overall: int


@dataclass
class Allocation:
    """Which global slots each block occupies.

    slots_of maps (i, j) to an ascending list of slot indices, one per unit
    of per-block scale. Blocks with zero scale are absent. slot_total is the
    number of global slots allocated.
    """

    slots_of: dict[tuple[int, int], list[int]]
    slot_total: int


def block_scales(x: BlockMatrix) -> BlockScales:
    n = x.shape.servers
    per = IntMatrix.zeros(n, n)
    for i in range(n):
        for j in range(n):
            per[i, j] = scale_of(x.block(i, j))
    return BlockScales(per_block=per, overall=scale_of(per))


def allocate(scales: BlockScales) -> Allocation:
    """Assign each block its global slot indices by decomposing the scale matrix."""
    res = bvn.decompose(scales.per_block, scale=scales.overall)
    slots_of: dict[tuple[int, int], list[int]] = {}
    for d, part in enumerate(res.parts):
        for i, j in part.pairs():
            slots_of.setdefault((i, j), []).append(d)
    # Extraction order is ascending in d, so the lists arrive sorted.
    for (i, j), slots in slots_of.items():
        assert len(slots) == scales.per_block[i, j]
    return Allocation(slots_of=slots_of, slot_total=scales.overall)


def hier_decompose(x: BlockMatrix) -> Schedule:
    """Full two-tier schedule for a blocked matrix.

    Returns a Schedule whose slot count is exactly BlockScales.overall,
    empty slots included, and whose slots sum back to x.data.
    """
    n = x.shape.servers
    m = x.shape.gpus_per_server
    scales = block_scales(x)
    alloc = allocate(scales)
    pairs_per_slot: list[list[tuple[int, int]]] = [[] for _ in range(scales.overall)]
    for i in range(n):
        for j in range(n):
            d_ij = scales.per_block[i, j]
            if d_ij == 0:
                continue
            parts = bvn.decompose(x.block(i, j), scale=d_ij).parts
            slot_list = alloc.slots_of[(i, j)]
            for r, d in enumerate(slot_list):
                if r >= len(parts):
                    break  # trailing all-dummy sub-slots serve nothing
                for l, k in parts[r].pairs():
                    pairs_per_slot[d].append((i * m + l, j * m + k))
    slots = [SubPermutation(x.shape.ports, pairs) for pairs in pairs_per_slot]
    return Schedule(slots, x.data.copy())


__all__ = ["BlockScales", "Allocation", "block_scales", "allocate", "hier_decompose"]
