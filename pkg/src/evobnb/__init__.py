"""Branch-and-bound MILP engine with evolvable node-selection policies."""

from .bench import (
    BenchReport,
    StrategySummary,
    geo_stddev,
    outcome_measure,
    run_bench,
    shifted_geomean,
)
from .bnb import (
    BeBfs,
    BeDfs,
    BnbNode,
    GAP_SENTINEL,
    LbBfs,
    ModelInfo,
    PseudocostTable,
    ScoreBfs,
    SolveOutcome,
    SolveStatus,
    Strategy,
    best_estimate,
    branch_variable,
    compute_gap,
    next_node,
    solve,
    update_pseudocosts,
)
from .expr import (
    BIG_SCORE,
    DEFAULT_BIG_M,
    OPERATORS,
    TERMINALS,
    NodeContext,
    ScoreExpr,
    count_perfect_trees,
    evaluate,
    parse,
    random_tree,
    read_expr_file,
    to_text,
    write_expr_file,
)
from .gp import (
    EvolveResult,
    GenerationRecord,
    GpConfig,
    Individual,
    crossover,
    double_tournament,
    evaluate_fitness,
    evolve,
    mutate,
    size_playoff,
)
from .lp import LpProblem, LpResult, LpStatus, solve_lp
from .milp import (
    DisconnectedGraphError,
    ErGraph,
    Milp,
    MilpFormatError,
    gen_er_graph,
    gen_fcmcnf,
    gen_gisp,
    gen_maxsat,
    maxsat_from_clauses,
    read_instance,
    write_instance,
)

__version__ = "0.1.0"
