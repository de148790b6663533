"""Multi-partition block-matching motion estimation with fast sub-pixel strategies."""

from .cost_model import (
    LambdaModel,
    MotionVector,
    cost,
    lagrange_term,
    mv_bits,
    predict_mv,
    sad,
    se_code_length,
)
from .integer_me import (
    BLOCK_TYPE_LARGE,
    BLOCK_TYPE_SMALL,
    CostCross,
    PartitionJob,
    block_class,
    full_search,
)
from .interpolation import PaddedReference, QuarterPos, build_padded
from .mode_decision import (
    STRATEGIES,
    EncodeParams,
    MbModeResult,
    baseline_estimate_mb,
    estimate_mb,
    estimate_sequence,
)
from .stats import SearchStats, mc_prediction_psnr
from .subpel import (
    GateParams,
    SubpelOutcome,
    bilinear_picks,
    cbfps_offset,
    cbfps_search,
    drop_gate,
    flatness_gate,
    fpme_search,
    full_subpel,
    quad_offset,
    rfsme_refine,
    rfsme_rough,
)
from .video_io import (
    LumaPlane,
    SequenceConfig,
    SequenceError,
    load_sequence,
    make_plane,
    save_raw,
    synth_sequence,
)

__all__ = [
    "BLOCK_TYPE_LARGE",
    "BLOCK_TYPE_SMALL",
    "CostCross",
    "EncodeParams",
    "GateParams",
    "LambdaModel",
    "LumaPlane",
    "MbModeResult",
    "MotionVector",
    "PaddedReference",
    "PartitionJob",
    "QuarterPos",
    "STRATEGIES",
    "SearchStats",
    "SequenceConfig",
    "SequenceError",
    "SubpelOutcome",
    "baseline_estimate_mb",
    "bilinear_picks",
    "block_class",
    "build_padded",
    "cbfps_offset",
    "cbfps_search",
    "cost",
    "drop_gate",
    "estimate_mb",
    "estimate_sequence",
    "flatness_gate",
    "fpme_search",
    "full_search",
    "full_subpel",
    "lagrange_term",
    "load_sequence",
    "make_plane",
    "mc_prediction_psnr",
    "mv_bits",
    "predict_mv",
    "quad_offset",
    "rfsme_refine",
    "rfsme_rough",
    "sad",
    "save_raw",
    "se_code_length",
    "synth_sequence",
]

__version__ = "0.1.0"
