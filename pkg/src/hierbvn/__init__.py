"""Two-tier crossbar scheduling: decomposition, balancing, and simulation.

The pieces compose bottom-up:

  matrixcore   integer matrices, block views, slots, schedules, text format
  bvn          decomposition of a square matrix into weighted sub-permutations
  hierarchical two-level decomposition driven by per-block scales
  balancing    two-phase intra-block load spreading
  streams      splittable keyed random streams, exact Poisson sampling
  traffic      rate matrices, admissibility, per-frame arrival batches
  sim          the frame-driven simulator (fast and verify modes)
  cli          command line front end
"""

from .balancing import BalanceReport, Transfer, balance_all_blocks, balance_block
from .bvn import BvnResult, InfeasibleScaleError, decompose, pad_to_regular
from .hierarchical import Allocation, BlockScales, allocate, block_scales, hier_decompose
from .matrixcore import (
    BlockMatrix,
    BlockShape,
    DimensionError,
    EntryRangeError,
    IntMatrix,
    MatrixParseError,
    Schedule,
    SubPermutation,
    aggregate_servers,
    col_sums,
    completion_lower_bound,
    parse_matrix_text,
    render_matrix_text,
    row_sums,
    scale_of,
)
from .sim import (
    DEFAULT_FRAME_CAP,
    MODEL_HOTSPOT,
    MODEL_UNIFORM,
    FrameState,
    FrameSummary,
    ScheduleVerificationError,
    SimConfig,
    SimStats,
    frame_length,
    residual_after,
    run,
    run_many,
    step,
    verify_schedule,
)
from .streams import flow_key, frame_key, poisson, poisson_batch, run_key
from .traffic import (
    Admissibility,
    ArrivalBatch,
    RateMatrix,
    ServerRates,
    StreamKey,
    is_admissible,
    rate_matrix_hotspot,
    rate_matrix_uniform,
    sample_arrivals,
    server_rates,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # matrixcore
    "BlockMatrix",
    "BlockShape",
    "DimensionError",
    "EntryRangeError",
    "IntMatrix",
    "MatrixParseError",
    "Schedule",
    "SubPermutation",
    "aggregate_servers",
    "col_sums",
    "completion_lower_bound",
    "parse_matrix_text",
    "render_matrix_text",
    "row_sums",
    "scale_of",
    # bvn
    "BvnResult",
    "InfeasibleScaleError",
    "decompose",
    "pad_to_regular",
    # hierarchical
    "Allocation",
    "BlockScales",
    "allocate",
    "block_scales",
    "hier_decompose",
    # balancing
    "BalanceReport",
    "Transfer",
    "balance_all_blocks",
    "balance_block",
    # streams
    "flow_key",
    "frame_key",
    "poisson",
    "poisson_batch",
    "run_key",
    # traffic
    "Admissibility",
    "ArrivalBatch",
    "RateMatrix",
    "ServerRates",
    "StreamKey",
    "is_admissible",
    "rate_matrix_hotspot",
    "rate_matrix_uniform",
    "sample_arrivals",
    "server_rates",
    # sim
    "DEFAULT_FRAME_CAP",
    "MODEL_HOTSPOT",
    "MODEL_UNIFORM",
    "FrameState",
    "FrameSummary",
    "ScheduleVerificationError",
    "SimConfig",
    "SimStats",
    "frame_length",
    "residual_after",
    "run",
    "run_many",
    "step",
    "verify_schedule",
]
