"""Approximation of the 3D discrete scan statistic distribution.

The package estimates P(S <= n) for the maximum window total over an integer
random field, together with rigorous approximation- and simulation-error
bounds, using an importance-sampling estimator for the base probabilities.
"""

from .bounds import (
    AlphaContext,
    e_term,
    extrapolate_max_cdf,
    extrapolate_max_cdf_raw,
    f_factor,
    kappa,
    l_bound,
    max_cdf_bound,
    second_magnitude_root,
    smallest_magnitude_root,
)
from .distributions import (
    AggregateDistribution,
    DistributionModel,
    Field,
    fill_window_conditional,
    sample_field,
    sample_truncated_aggregate,
    window_aggregate_distribution,
)
from .errors import (
    BoundValidityError,
    EmptySupportError,
    GeometryError,
    ParameterError,
    ScanStatError,
    TheoremInapplicableError,
    UnreachableSignificanceError,
)
from .estimator import (
    NaiveEstimate,
    QEstimate,
    TailEstimate,
    bonferroni_bound,
    estimate_q,
    is_tail_estimate,
    naive_scan_estimate,
)
from .pipeline import (
    ApproxReport,
    CriticalValue,
    ErrorBudget,
    InterpolatedReport,
    PipelineConfig,
    QTable,
    approximate_cdf,
    cascade_point,
    critical_value,
    error_budget,
    interpolated_cdf,
    scan_cdf_reports,
)
from .scanning import (
    PrefixVolume,
    ScanGeometry,
    build_prefix,
    exceedance_count,
    scan_statistic,
    window_sum,
    window_sums_all,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateDistribution",
    "AlphaContext",
    "ApproxReport",
    "BoundValidityError",
    "CriticalValue",
    "DistributionModel",
    "EmptySupportError",
    "ErrorBudget",
    "Field",
    "GeometryError",
    "InterpolatedReport",
    "NaiveEstimate",
    "ParameterError",
    "PipelineConfig",
    "PrefixVolume",
    "QEstimate",
    "QTable",
    "ScanGeometry",
    "ScanStatError",
    "TailEstimate",
    "TheoremInapplicableError",
    "UnreachableSignificanceError",
    "approximate_cdf",
    "bonferroni_bound",
    "build_prefix",
    "cascade_point",
    "critical_value",
    "e_term",
    "error_budget",
    "estimate_q",
    "exceedance_count",
    "extrapolate_max_cdf",
    "extrapolate_max_cdf_raw",
    "f_factor",
    "fill_window_conditional",
    "interpolated_cdf",
    "is_tail_estimate",
    "kappa",
    "l_bound",
    "max_cdf_bound",
    "naive_scan_estimate",
    "sample_field",
    "sample_truncated_aggregate",
    "scan_cdf_reports",
    "scan_statistic",
    "second_magnitude_root",
    "smallest_magnitude_root",
    "window_aggregate_distribution",
    "window_sum",
    "window_sums_all",
]
