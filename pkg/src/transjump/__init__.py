"""Trans-dimensional MCMC with exact birth-or-death acceptance ratios."""

from .core import (
    BrokenKernelError,
    ChainOutput,
    ConfigurationError,
    IterationRecord,
    Move,
    MoveSet,
    ProposalOutcome,
    VarDimState,
    mhg_accept,
    move_stats,
    rng_stream,
    run_chain,
    select_move,
)
from .birthdeath import (
    BirthDeathSchedule,
    BoDDetail,
    ComponentProposal,
    SortedRestriction,
    birth_propose_sorted,
    birth_propose_unsorted,
    bod_log_ratio,
    bod_move_set,
    death_propose,
    legacy_log_ratio,
    move_log_ratio,
    pmf_component_proposal,
    schedule_probabilities,
    sorted_log_ratio,
    uniform_component_proposal,
)
from .sinusoid import (
    ExperimentSpec,
    PriorOnlyTarget,
    SingularDesignError,
    SinusoidPosterior,
    accelerated_poisson_logpmf,
    accelerated_poisson_pmf,
    design_matrix,
    frequency_update_move,
    quad_form,
    sample_delta2,
    sample_lambda,
    sinusoid_log_target,
    synth_signal,
    synthesize,
    truncated_poisson_logpmf,
    truncated_poisson_pmf,
)
from .experiment import JointRunResult, SweepRecord, run_joint_chain
from .oracle import (
    DiscreteToySpec,
    DiscreteToyTarget,
    build_transition_matrix,
    chi_square_stat,
    detailed_balance_residual,
    enumerate_states,
    normalized_target_vector,
    quadrature_posterior_k,
    random_toy_spec,
    stationary_distribution,
    tv_distance,
)

__version__ = "0.1.0"
