"""reservelearn: learn near-optimal anonymous-reserve prices from samples.

The package covers the full pipeline: parametric value distributions with
left-continuous CDF semantics, exact top-two order statistics, the
anonymous-reserve revenue functional, the shading-based learning algorithm,
verifiers for the supporting revenue-smoothness facts, and a seeded
Monte-Carlo experiment harness with a CLI.
"""

from .distributions import (
    AllOnesCdf,
    AnalyticCdf,
    Cdf,
    DiscreteGrid,
    EmpiricalCdf,
    Exponential,
    GeneralizedPareto,
    MarginalDist,
    Mixture,
    PointMass,
    ScaledCdf,
    TruncatedCdf,
    TruncatedPareto,
    Uniform,
    cdf_eval,
    cdf_quantile,
    check_mhr,
    check_regular,
    dist_from_spec,
    sample,
)
from .learner import (
    LearnOutput,
    ShadeParams,
    ShadeProfile,
    ShadedCdf,
    beta,
    learn_reserve,
    learn_reserve_from_top_two,
    required_samples,
    shade,
    shaded_cdf,
    shaded_pair,
)
from .orderstats import (
    InstancePair,
    JointSampler,
    ProductInstance,
    monopoly_revenue_max,
    normalize_instance,
    normalize_product,
    order_stat_inequality_check,
    sample_top_two,
    shared_uniform_sampler,
    top_two_cdfs,
    top_two_of_rows,
)
from .reporting import CheckReport
from .revenue import (
    ReserveResult,
    SearchConfig,
    ar_revenue,
    optimal_reserve,
    reserve_search_range,
    revenue_monotonicity_check,
    solve_c_star,
)

__version__ = "0.1.0"
