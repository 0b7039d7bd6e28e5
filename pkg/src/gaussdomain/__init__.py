"""Exact and high-accuracy probability computations for normal vectors:
quadratic forms, arbitrary domains, classification error rates, and
distributions of functions of normals."""

from .core import (
    NormalDist,
    QuadraticDomain,
    SqrtMatrix,
    standardize_quadratic,
    symmetric_sqrt,
)
from .errors import (
    AccuracyWarning,
    DomainEvaluationError,
    GaussDomainError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidMethodError,
    InvalidValuesError,
    SingularCovarianceError,
    UnboundedFunctionError,
)
from .gx2 import (
    FlatCase,
    Gx2Params,
    gx2_cdf,
    gx2_inv,
    gx2_params_from_quad,
    gx2_pdf,
    gx2_rand,
    gx2_sf,
    gx2_stats,
)
from .domains import (
    ImplicitDomain,
    RayTrace,
    TracedDomain,
    domain_complement,
    domain_intersect,
    domain_union,
    ray_trace_implicit,
    ray_trace_quadratic,
)
from .polar import (
    IntegralConfig,
    IntegralResult,
    alpha_from_trace,
    integrate_normal,
    mc_directions,
    ray_cdf,
    ray_log_sf,
    ray_pdf,
    ray_sf,
)
from .classify import (
    ClassificationResult,
    ClassSpec,
    DprimeIndices,
    LabeledSamples,
    OptimizedBoundary,
    ProjectedDecision,
    bayes_boundary,
    classify_multi,
    classify_two,
    dprime_indices,
    fit_normals,
    m_interval_accuracy,
    optimize_boundary,
    project_decision,
    sample_outcome_value,
    two_interval_spec,
)
from .fndist import (
    FnOfNormal,
    FnStats,
    TransformedNormal,
    fn_cdf,
    fn_inv,
    fn_pdf,
    fn_sf,
    fn_stats,
    joint_cdf,
    joint_pdf,
    transform_dist,
)

__version__ = "0.1.0"

__all__ = [
    "NormalDist",
    "QuadraticDomain",
    "SqrtMatrix",
    "standardize_quadratic",
    "symmetric_sqrt",
    "GaussDomainError",
    "InvalidArgumentError",
    "InvalidMethodError",
    "InvalidValuesError",
    "SingularCovarianceError",
    "DomainEvaluationError",
    "UnboundedFunctionError",
    "InsufficientDataError",
    "AccuracyWarning",
    "FlatCase",
    "Gx2Params",
    "gx2_params_from_quad",
    "gx2_cdf",
    "gx2_sf",
    "gx2_pdf",
    "gx2_inv",
    "gx2_rand",
    "gx2_stats",
    "ImplicitDomain",
    "RayTrace",
    "TracedDomain",
    "ray_trace_quadratic",
    "ray_trace_implicit",
    "domain_complement",
    "domain_intersect",
    "domain_union",
    "IntegralConfig",
    "IntegralResult",
    "integrate_normal",
    "alpha_from_trace",
    "mc_directions",
    "ray_pdf",
    "ray_cdf",
    "ray_sf",
    "ray_log_sf",
    "ClassSpec",
    "LabeledSamples",
    "ClassificationResult",
    "DprimeIndices",
    "OptimizedBoundary",
    "ProjectedDecision",
    "bayes_boundary",
    "classify_two",
    "classify_multi",
    "dprime_indices",
    "two_interval_spec",
    "m_interval_accuracy",
    "fit_normals",
    "optimize_boundary",
    "sample_outcome_value",
    "project_decision",
    "FnOfNormal",
    "FnStats",
    "TransformedNormal",
    "fn_cdf",
    "fn_sf",
    "fn_pdf",
    "fn_inv",
    "fn_stats",
    "joint_cdf",
    "joint_pdf",
    "transform_dist",
    "__version__",
]
