"""Quotient metric spaces of partitioned finite metric spaces, and Peano
quotients of sampled continua."""
from .checks import (
    f_restricted_delta,
    local_isometry_check,
    lower_bound_check,
    oracle_check,
    refinement_check,
    separation_check,
    verify_pseudometric,
)
from .congestion import (
    CanonicalDecomposition,
    CongestionParams,
    ConnectivityWarning,
    PipelineReport,
    canonical_partition,
    congestion_set,
    peano_pipeline,
    precision_recall,
    residual_congestion_check,
)
from .generators import GeneratedCorpus, generate
from .metric import (
    CapacityError,
    DuplicatePointsError,
    MalformedInputError,
    MetricSpace,
    Partition,
    PreconditionError,
    ball,
    epsilon_components,
    subset_distance,
    validate_metric,
)
from .quotient import (
    ClassGraph,
    QuotientPseudoMetric,
    QuotientSpace,
    StringWitness,
    class_graph,
    delta_p,
    delta_p_oracle,
    quotient_space,
)
from .report import Report, Violation

__version__ = "0.1.0"
