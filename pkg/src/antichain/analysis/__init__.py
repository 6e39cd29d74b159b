"""Variance and covariance estimators plus exact reference values and diagnostics."""
from .diagnostics import (
    DependenceDiagnostic,
    correlation_with_se,
    ks_critical,
    ks_statistic,
    nlod_nuod_check,
)
from .theory import (
    ExactIlhsCdf,
    KsBoundReport,
    TheoryRow,
    c_star,
    circle_corr_theory,
    hoeffding_corr_from_cdf,
    ilhs_corr_theory,
    ilhs_joint_cdf_exact,
    ilhs_distance_bound,
    indicator_vrf_argmax_numeric,
    indicator_vrf_max,
    indicator_vrf_normal,
    indicator_vrf_uniform,
    k_alpha_table,
    ks_distance_bound_check,
    normal_joint_cdf,
    normal_pair_uniform_corr,
    normal_pair_uniform_corr_series,
    relative_gain,
    s_star,
    S_STAR_LIMIT,
    thm7_bound,
    unit_grid,
)
from .vrf import (
    AutocovEstimates,
    DegenerateEstimandError,
    InsufficientReplicationError,
    VrfReport,
    estimate_autocovs,
    PooledBetweenCov,
    median_time,
    pooled_between_cov,
    vrf_generalized,
    vrf_size_fixed,
    vrf_time_fixed,
)
