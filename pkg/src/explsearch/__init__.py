"""Black-box optimization of chain-of-thought explanation sets.

Generate candidate explanations per exemplar slot, pseudo-label an unlabeled
dev set by majority vote, rank combinations with cheap proxy metrics, and
spend an explicit Pass budget evaluating the most promising ones.
"""

from .backend import (
    Backend,
    BackendError,
    CapabilityError,
    Completion,
    CompletionRequest,
    HTTPCompletionBackend,
    ProtocolError,
    RetryableBackendError,
    UsageLedger,
    UsageRecord,
    count_tokens,
    pass_cost,
)
from .budget import BudgetLedger, osacc_overhead_examples, osll_overhead_examples
from .cache import CachedBackend, CompletionCache, cache_lookup_or_call
from .candidates import (
    CandidateSet,
    EmptyCandidateSetError,
    GenerationConfig,
    generate_candidates,
    seed_combination,
    shots_for_combination,
    split_completion,
)
from .formats import (
    Combination,
    Exemplar,
    FormatError,
    NormalizationError,
    Task,
    TaskFormat,
    extract_answer,
    leave_one_out_shots,
    normalize_answer,
    parse_prompt,
    render_prompt,
)
from .inference import decode_greedy, decode_self_consistency
from .reports import UndefinedCorrelationError, pearson, variance_report
from .scoring import (
    OneShotAccuracyTable,
    PairwiseLogLikMatrix,
    build_osacc_table,
    build_osll_matrix,
    evaluate_objective,
    score_objective,
    score_osacc,
    score_osll,
    topk_additive,
    topk_pairwise,
)
from .search import (
    ConfigurationError,
    ScoredCombination,
    SearchPlan,
    SearchResult,
    derive_rank_count,
    evaluate_test,
    max_at_x,
    run_search,
)
from .silver import DevSet, SilverLabels, sample_combinations, silver_label
from .simulated import SimulatedBackend, SimulatedModelSpec
from .toybench import ToyBenchmark, build_toy_benchmark
from .voting import NoVotesError, majority_vote

__version__ = "0.1.0"
