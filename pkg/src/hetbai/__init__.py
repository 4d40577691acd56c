"""Fixed-confidence best-arm identification for federated bandits.

Clients see overlapping subsets of a common arm pool; an arm's quality is
the average of its per-client means.  The library computes the optimal
sampling allocation (one positive global vector over the arms), brackets the
instance hardness constant, and simulates a track-and-stop protocol that
communicates only at exponentially spaced instants.
"""

from .instance import (
    ArmPartition,
    ArmStats,
    ConfusionPairs,
    ProblemInstance,
    ValidationReport,
    arm_stats,
    confusion_pairs,
    from_json,
    gen_hardness_instance,
    gen_overlap_instance,
    load_instance,
    partition_arms,
    save_instance,
    to_json,
    validate,
)
from .allocation import (
    Allocation,
    GlobalVector,
    HMatrix,
    PowerIterationError,
    allocation_from_global,
    balance_residuals,
    brute_force_g_tilde_max,
    c_star_interval,
    closest_alternative,
    g_exact,
    g_tilde,
    g_tilde_per_class,
    global_vector,
    h_matrix,
    optimal_allocation,
    perron_positive_eigenvector,
    transport_cost,
)
from .policy import (
    ClientState,
    CommSchedule,
    ServerState,
    comm_schedule,
    f_eval,
    f_inverse,
    observe,
    recommend,
    select_arm,
    server_global_vector,
    should_stop,
    uniform_select,
    z_statistic,
)
from .simulator import (
    InstantLog,
    RunRecord,
    StepCapExceeded,
    SummaryRow,
    SweepConfig,
    aggregate,
    export_records,
    export_summary,
    read_records,
    run_episode,
    sweep,
)
from .ingest import IngestResult, RatingsRow, RatingsTable, build_instance, parse_ratings

__version__ = "0.1.0"
