"""Model-based estimation and model selection on [0,1] and in R^n.

Building blocks: step densities with exact L2/Hellinger geometry
(densities), interval partitions and Kraft-weighted families (partitions),
histogram and trigonometric-series estimators with exact risk formulas
(histograms), Gaussian-mean estimation with lattice nets and penalized
selection (gaussian), robust tournament selection and hold-out pipelines
(selection), hypercube risk floors (lowerbounds), and a reproducible
verification harness (experiments, cli).
"""

from .densities import (
    Affinity,
    DensityError,
    GridDensity,
    PiecewiseDensity,
    affinity_tensor_power,
    gaussian_affinity,
    hellinger_affinity,
    hellinger_distance,
    l2_distance,
    overlap,
)
from .gaussian import (
    GaussianError,
    GaussianObservation,
    LatticeNet,
    LinearModel,
    build_variable_selection_family,
    count_lattice_in_ball,
    gaussian_sample,
    gaussian_two_point_test,
    lattice_mle,
    oracle_penalized_value,
    penalized_select,
    project_mle,
    verify_net_property,
)
from .histograms import (
    CellCounts,
    HolderClass,
    SampleSet,
    cell_counts,
    hellinger_projection_bound,
    hellinger_risk_mc,
    histogram,
    histogram_oracle,
    l2_projection,
    l2_risk_mc,
    sample,
    squared_bias,
    stochastic_error_exact,
    trig_projection_estimator,
)
from .lowerbounds import (
    AssouadFamily,
    HammingIndex,
    LowerBoundError,
    assouad_bound,
    assouad_bound_weak,
    build_assouad_family,
    l2_minimax_floor,
)
from .partitions import (
    AdaptiveResult,
    DyadicIndex,
    Partition,
    PartitionError,
    Weight,
    WeightedFamily,
    adaptive_partition,
    assign_weights,
    complexity_index,
    count_complete_binary_trees,
    enumerate_dyadic_family,
    is_tree_partition,
    kraft_sum,
    regular_partition,
)
from .reporting import ReportRow, RiskReport
from .seeding import rng_for, seed_split
from .selection import (
    Candidate,
    CandidateSet,
    SelectionError,
    TestOutcome,
    baseline_penalized_holdout,
    holdout_select,
    likelihood_pair_test,
    robust_pair_test,
    run_tournament,
    tournament_select,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
