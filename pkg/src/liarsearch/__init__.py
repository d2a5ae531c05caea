"""Comparison search and insertion sort that survive k adversarial lies.

A library plus CLI: randomized interval placement of a distribution on
[0, 1], two lie-resilient binary-search strategies over it, adversary
simulators (including an exhaustive worst-case explorer), a brute-force
minimax oracle, a lie-resilient distributional insertion sort, and
calculators for the entropy-based cost bounds.
"""

__version__ = "0.1.0"

from .adversary import (
    exhaustive_worst_case,
    random_alpha_source,
    scheduled_source,
    truthful_source,
)
from .backtrack import BacktrackSearch, run_backtrack_search
from .checkpoint import CheckpointSearch, run_checkpoint_search
from .oracle import optimal_worst_case, packing_feasible
from .placement import (
    ComparisonQuery,
    NodePath,
    Placement,
    ThetaStream,
    build_placement,
)
from .sorting import (
    MallowsPrior,
    UniformPrior,
    noisy_insertion_sort,
    permutation_entropy,
)
from .numerics import (
    BoundsReport,
    Dyadic,
    ProbabilityVector,
    Rational,
    bounds_report,
    binom_leq,
    convergence_partial_sum,
    entropy,
    h2,
    h3,
    kl_divergence,
    kraft_sum,
    load_distribution,
    lower_bound,
    olog,
    radius_r,
    radius_rprime,
)

__all__ = [
    "BacktrackSearch",
    "BoundsReport",
    "CheckpointSearch",
    "ComparisonQuery",
    "Dyadic",
    "MallowsPrior",
    "NodePath",
    "Placement",
    "ProbabilityVector",
    "Rational",
    "ThetaStream",
    "UniformPrior",
    "bounds_report",
    "binom_leq",
    "build_placement",
    "convergence_partial_sum",
    "entropy",
    "exhaustive_worst_case",
    "h2",
    "h3",
    "kl_divergence",
    "kraft_sum",
    "load_distribution",
    "lower_bound",
    "noisy_insertion_sort",
    "olog",
    "optimal_worst_case",
    "packing_feasible",
    "permutation_entropy",
    "radius_r",
    "radius_rprime",
    "random_alpha_source",
    "run_backtrack_search",
    "run_checkpoint_search",
    "scheduled_source",
    "truthful_source",
    "__version__",
]
