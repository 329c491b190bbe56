"""Stochastic linear partial monitoring with information directed sampling.

Finite games pair each action with an observation operator; the learner sees
a noisy linear measurement of the hidden parameter while the reward stays
hidden.  The package provides the regularized least squares estimator, IDS
and baseline policies, a minimax-regime classifier, contextual and
kernelized variants, and a seeded experiment harness with a CLI.
"""

from .games import (
    Game,
    Environment,
    NoiseModel,
    PresetSpec,
    build_game,
    laser_truth,
    sample_observation,
)
from .estimator import (
    EstimatorState,
    init_estimator,
    update,
    beta_radius,
    weighted_norm,
    total_info_gain,
)
from .policies import (
    POLICY_NAMES,
    NoInformationError,
    PolicyDecision,
    PolicyKind,
    decide,
    gap_relaxed,
    gap_upper,
    info_gain_directed,
    info_gain_full,
    min_ratio_pair,
    plausible_set,
    ucb_scores,
)
from .classify import (
    ClassificationReport,
    REGIMES,
    alignment_upper,
    are_neighbors,
    classify,
    dueling_alignment_upper,
    is_globally_observable,
    is_locally_observable,
    neighborhood_actions,
    pareto_actions,
)
from .contextual import (
    ContextualGame,
    ContextualPlan,
    conditional_ids,
    contextual_ids,
    expected_alignment_upper,
)
from .kernels import (
    GradObs,
    KernelGame,
    KernelNumericsError,
    KernelSpec,
    KernelTruth,
    PairObs,
    PointObs,
    dueling_blocks,
    gradient_blocks,
    init_kernel_state,
    kernel_beta,
    kernel_decide,
    kernel_gap,
    kernel_info_gain,
    kernel_update,
    posterior,
)
from .harness import (
    ExperimentConfig,
    Trajectory,
    build_any_game,
    fit_regret_exponent,
    load_config,
    run_episode,
    run_experiment,
    run_reps,
    run_sweep,
)

__version__ = "0.1.0"
