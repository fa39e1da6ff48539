"""Analysis and simulation of message-passing decoders with missing connections.

The package models LDPC decoding hardware whose Tanner-graph wiring is
imperfect: each edge may be absent permanently (manufacturing defect) or
transiently (per-iteration timing fault), delivering an erasure in both
directions.  It provides density-evolution recursions for the peeling,
unanimity (Gallager A style), and counting (Gallager B style) decoders,
threshold and useful-region scanners, sensitivity and manufacturing-yield
analysis, and bit-level finite-length simulation with an exhaustive
small-instance oracle.
"""

from .analysis import (
    SensitivityResult,
    ThresholdPoint,
    ThresholdQuery,
    YieldGain,
    YieldParams,
    alpha_max,
    eta_threshold,
    sensitivity,
    threshold_curve,
    useful_region_boundary,
    yield_gain,
)
from .de import (
    DecoderKind,
    DecoderSpec,
    DEParams,
    DETrajectory,
    GBMassConvention,
    check_message_probs,
    de_step,
    default_gb_threshold,
    gallager_a_step,
    gallager_b_step,
    iterate_to_fixpoint,
    peeling_step,
)
from .ensemble import MAX_DEGREE, DegreeDistribution
from .graph import (
    MaskMode,
    MiswiringMask,
    TannerGraph,
    batch_active_edges,
    is_edge_active,
    sample_code,
)
from .sim import (
    AggregateStats,
    ChannelKind,
    ChannelModel,
    Msg,
    TrialConfig,
    decode_gallager_a,
    decode_gallager_b,
    decode_peeling,
    iter_trial_records,
    oracle_exact_ser,
    run_trials,
    simulate_graph,
    transmit_all_one,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "MAX_DEGREE",
    "DegreeDistribution",
    "DecoderKind",
    "DecoderSpec",
    "DEParams",
    "DETrajectory",
    "GBMassConvention",
    "check_message_probs",
    "de_step",
    "default_gb_threshold",
    "gallager_a_step",
    "gallager_b_step",
    "iterate_to_fixpoint",
    "peeling_step",
    "ThresholdQuery",
    "ThresholdPoint",
    "SensitivityResult",
    "YieldParams",
    "YieldGain",
    "eta_threshold",
    "threshold_curve",
    "useful_region_boundary",
    "alpha_max",
    "sensitivity",
    "yield_gain",
    "TannerGraph",
    "MaskMode",
    "MiswiringMask",
    "sample_code",
    "is_edge_active",
    "batch_active_edges",
    "Msg",
    "ChannelKind",
    "ChannelModel",
    "TrialConfig",
    "AggregateStats",
    "transmit_all_one",
    "decode_peeling",
    "decode_gallager_a",
    "decode_gallager_b",
    "simulate_graph",
    "run_trials",
    "iter_trial_records",
    "oracle_exact_ser",
]
