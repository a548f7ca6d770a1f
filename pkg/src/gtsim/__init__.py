"""Adaptive probabilistic group testing with non-identical priors.

Pipeline: truncate items below a probability threshold, bin the rest by
prior magnitude, split bins into bounded-ratio search sets, and search each
set with a binary descent over a prefix-code tree against noiseless OR
tests. Closed-form expected-test and success-probability bounds and a
seeded Monte Carlo harness sit alongside the algorithm.
"""

from .bounds import (
    BoundsReport,
    GlobalTestBound,
    ReferenceBounds,
    bernstein_report,
    budget_lower_bound,
    counting_success_bound,
    global_test_bound,
    identical_prior_report,
    laminar_expected_tests,
    optimal_fullness,
    reference_bounds,
    set_test_bound,
    sparsity_coefficient,
    success_upper_bound,
)
from .codetree import (
    HUFFMAN,
    SHANNON_FANO,
    CodeTree,
    build_tree,
    depth_bound,
    format_tree,
    huffman_lengths,
    kraft_sum,
    shannon_fano_lengths,
)
from .errors import (
    DegeneratePartition,
    DegenerateSet,
    EmptyInput,
    EmptyPopulation,
    GroupTestingError,
    InvalidParameter,
    InvalidProbability,
    IoError,
    OracleInconsistent,
    RatioViolated,
    TooLarge,
)
from .harness import (
    BoundsRow,
    CdfTable,
    ExperimentConfig,
    TrialRecord,
    aggregate_cdf,
    bounds_table,
    emit_csv,
    load_config_file,
    run_experiment,
)
from .partition import (
    BinLayout,
    PartitionResult,
    SearchSet,
    bin_index,
    bracket_term,
    layout_bins,
    max_bin_index,
    optimal_gamma,
    partition,
)
from .priors import (
    DefectivityVector,
    Population,
    PopulationStats,
    binary_entropy,
    defectivity_from_items,
    load_population,
    make_population,
    sample_defectivity,
    sample_dirichlet_priors,
    stats,
)
from .search import (
    EXPLICIT_CONFIRM,
    LAMINAR,
    MERGED_PRUNING,
    STRATEGIES,
    PipelineConfig,
    Plan,
    RunResult,
    SetSearchResult,
    TestOracle,
    execute,
    expected_tests_enumeration,
    monte_carlo_expected_tests,
    prepare,
    run_full,
    search_set,
)
from .threshold import TruncationResult, compute_theta, truncate, truncation_threshold

__version__ = "0.1.0"
