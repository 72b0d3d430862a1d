"""Exact and Monte Carlo analysis of QuickSort's distance to its limit law."""

from .errors import ResourceRefusal
from .exact import (
    PiQuadratic,
    Rational,
    distance_sq_closed,
    distance_sq_closed_table,
    distance_sq_dnc,
    distance_sq_dnc_table,
    distance_sq_recursive,
    harmonic,
    harmonic2,
    limit_variance,
    mean_comparisons,
    split_toll,
    split_toll_second_moment,
    split_toll_sum,
    split_toll_vector,
    sum_harmonic2,
    toll,
    w1_second_moment,
    w3_second_moment,
)
from .estimators import (
    EstimateReport,
    estimate_d2,
    estimate_distance_sq,
    estimate_limit_moments,
    estimate_w1_sq,
    estimate_w3_sq,
    level_variance_profile,
    run_coupled,
)
from .oracles import (
    QuadratureResult,
    beta_log_quadrature,
    mean_comparisons_bruteforce,
    quicksort_comparisons,
    split_toll_product_check,
    toll_sq_quadrature,
)
from .rng import DEFAULT_SEED, ReplicationStream
from .sim import (
    BstStats,
    CoupledSample,
    IntervalNode,
    coupled_sample,
    evaluate_limit,
    level_sums,
    run_quicksort,
    split_identity_residual,
)

__version__ = "0.1.0"
