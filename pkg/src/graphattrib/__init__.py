"""Graph-based semi-supervised speaker attribution for embedding vectors."""

from .baseline import CentroidModel, classify_cosine, classify_test_segments, fit_centroids
from .evaluation import (
    ALL_METHODS,
    EvalReport,
    ReportRow,
    RunResult,
    read_aggregate_csv,
    relative_error_reduction,
    report_to_table,
    run_experiment,
    segment_error_rate,
    write_aggregate_csv,
    write_per_run_csv,
)
from .gcn import (
    AdamState,
    ForwardState,
    GcnConfig,
    GcnGrads,
    GcnParams,
    ProbabilityMatrix,
    TrainOutcome,
    adam_step,
    classify_gcn,
    elu,
    gcn_backward,
    gcn_forward,
    gcn_forward_state,
    load_gcn_params,
    masked_cross_entropy,
    predict_gcn,
    save_gcn_params,
    softmax_rows,
    split_labeled_nodes,
    train_fold,
    train_session,
)
from .graph import (
    AffinityGraph,
    GraphConstructionConfig,
    NormalizedOperator,
    OperatorFlavor,
    build_affinity,
    cosine,
    dump_edges,
    gcn_normalize,
    sym_normalize,
)
from .labelprop import (
    LpConfig,
    SoftLabelMatrix,
    classify_lp,
    init_labels,
    lp_closed_form,
    lp_step,
    predict_argmax,
    run_lp,
)
from .seeding import derive_seed
from .segments import (
    ProfileSample,
    Segment,
    SegmentKind,
    SegmentSet,
    average_vectors,
    load_segment_set,
    restrict_to_sample,
    sample_consecutive_profiles,
    save_segment_set,
)
from .synth import SynthConfig, all_vectors_unit_norm, gen_session

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AffinityGraph",
    "ALL_METHODS",
    "CentroidModel",
    "EvalReport",
    "ForwardState",
    "GcnConfig",
    "GcnGrads",
    "GcnParams",
    "GraphConstructionConfig",
    "LpConfig",
    "NormalizedOperator",
    "OperatorFlavor",
    "ProbabilityMatrix",
    "ProfileSample",
    "ReportRow",
    "RunResult",
    "Segment",
    "SegmentKind",
    "SegmentSet",
    "SoftLabelMatrix",
    "SynthConfig",
    "TrainOutcome",
    "adam_step",
    "all_vectors_unit_norm",
    "average_vectors",
    "build_affinity",
    "classify_cosine",
    "classify_gcn",
    "classify_lp",
    "classify_test_segments",
    "cosine",
    "derive_seed",
    "dump_edges",
    "elu",
    "fit_centroids",
    "gcn_backward",
    "gcn_forward",
    "gcn_forward_state",
    "gcn_normalize",
    "gen_session",
    "init_labels",
    "load_gcn_params",
    "load_segment_set",
    "lp_closed_form",
    "lp_step",
    "masked_cross_entropy",
    "predict_argmax",
    "predict_gcn",
    "read_aggregate_csv",
    "relative_error_reduction",
    "report_to_table",
    "restrict_to_sample",
    "run_experiment",
    "run_lp",
    "sample_consecutive_profiles",
    "save_gcn_params",
    "save_segment_set",
    "segment_error_rate",
    "softmax_rows",
    "split_labeled_nodes",
    "sym_normalize",
    "train_fold",
    "train_session",
    "write_aggregate_csv",
    "write_per_run_csv",
]
