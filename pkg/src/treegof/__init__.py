"""treegof: two-sample and one-sample goodness-of-fit tests on random trees.

The test statistic is the supremum, over all suffix-closed trees in a
truncated label space, of the absolute difference between the mean sample
distances; it is computed exactly through a penalized min-cut reduction.
Context trees can be estimated from symbol sequences, and branching-process
models provide synthetic tree laws for calibration and power studies.
"""

from .errors import (
    DataError,
    GuardError,
    SolverError,
    SpaceMismatchError,
    SuffixClosureError,
    TreegofError,
    UndefinedContextError,
)
from .space import (
    Configuration,
    OccupancyVector,
    Tree,
    TreeSample,
    TreeSpace,
    WeightFunction,
    distance,
    is_tree,
    mean_distance,
    mean_occupancy,
)
from .mincut import (
    CutResult,
    FlowNetwork,
    LinearField,
    beta_for,
    build_network,
    linear_field,
    max_flow_min_cut,
    minimize_over_trees,
    penalty,
    scaled_statistic,
    sup_statistic,
)
from .pst import CountTable, PstParams, SequenceCorpus, count_windows, estimate_context_tree, transition_estimate
from .genmodels import (
    GwSampler,
    GwSpec,
    TreeShift,
    VlmcSpec,
    classical_gw_marginals,
    depth3_binary_chain,
    eldest_brother_shift,
    expected_distance,
    father_shift,
    gw_marginals,
    law_marginals,
    law_mean_distance,
    markov_conditional,
    model_from_dict,
    non_identifiability_pair,
    pseudo_gw_marginals,
    reconstruct_distribution,
    sample_gw_matrix,
    sample_gw_tree,
    simulate_vlmc,
)
from .inference import (
    QuantileTable,
    TestConfig,
    TestReport,
    mc_quantile,
    one_sample_mc_pvalue,
    one_sample_statistic,
    permutation_two_sample,
    power_estimate,
    sup_from_matrices,
)
from .treeio import parse_tree_lines, read_sequences, serialize_tree_lines

__version__ = "0.1.0"
