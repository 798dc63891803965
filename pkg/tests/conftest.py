"""Shared fixtures: small matrices with hand-checked expected results."""

from __future__ import annotations

import pytest

from hierbvn.matrixcore import BlockMatrix, BlockShape, IntMatrix


def ring_demo_matrix() -> BlockMatrix:
    """3 servers x 2 GPUs; all-ones 2x2 blocks at (0,1), (1,2), (2,0).

    The demand forms a ring over servers. Hand-worked facts used as oracles
    across the suite:
      server totals       [[0,4,0],[0,0,4],[4,0,0]]
      per-block scales    [[0,2,0],[0,0,2],[2,0,0]], overall scale 2
      busiest-port bound  2
      a 2-slot schedule exists (both slots full permutations)
    """
    shape = BlockShape(3, 2)
    bm = BlockMatrix.zeros(shape)
    ones = IntMatrix([[1, 1], [1, 1]])
    bm.set_block(0, 1, ones)
    bm.set_block(1, 2, ones)
    bm.set_block(2, 0, ones)
    return bm


# The unique 2-slot schedule this library's deterministic extraction produces
# for ring_demo_matrix, as row->col maps over the 6 ports. Worked out by hand:
# slot 0 pairs identity sub-blocks, slot 1 the flipped ones.
RING_DEMO_SLOT0 = [(0, 2), (1, 3), (2, 4), (3, 5), (4, 0), (5, 1)]
RING_DEMO_SLOT1 = [(0, 3), (1, 2), (2, 5), (3, 4), (4, 1), (5, 0)]


@pytest.fixture
def ring_demo() -> BlockMatrix:
    return ring_demo_matrix()
