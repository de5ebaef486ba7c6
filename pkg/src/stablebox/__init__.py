"""Monte Carlo laboratory for CUSUM and permuted CUSUM statistics under stable heavy tails."""

__version__ = "0.1.0"

from .cusum import (
    CusumPath,
    Realization,
    batch_cusum,
    cusum_an,
    cusum_an_nu,
    cusum_an_nu_permuted,
    cusum_an_permuted,
    cusum_zn,
    cusum_zn_permuted,
    default_nu,
    sup_functional,
    t_n,
    t_n_nu,
    tie_break,
)
from .lepage import (
    DEFAULT_K,
    LePageEnvironment,
    StableBridgePath,
    centering_constant,
    centering_constants,
    exp_partial_sums,
    lepage_terms,
    sample_environment,
    sample_eta_with_max,
    sample_stable_bridge,
    sample_stable_bridges,
    truncation_diagnostic,
)
from .limit_law import (
    LimitDraw,
    UnconditionalDraws,
    compute_m,
    r_conditional_covariance,
    r_conditional_variance,
    sample_r_conditional,
    sample_r_unconditional,
    tail_variance_ratio,
)
from .permutation import (
    ConditionalCdfEstimate,
    SelectionIndicators,
    conditional_cdf_estimate,
    enumerate_permutation_distribution,
    epsilon_indicators,
    epsilon_moments,
    permuted_cusum_samples,
    random_permutation,
)
from .rng import RngStream, derive_stream
from .stable import (
    StableParams,
    TailParams,
    analytic_mean,
    characteristic_fn,
    sample_domain_of_attraction,
    sample_stable,
)
from .stats import (
    EmpiricalDistribution,
    empirical_cdf,
    kolmogorov_cdf,
    ks_one_sample,
    ks_two_sample,
    quantile,
)
