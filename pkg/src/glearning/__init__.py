"""Tabular G-learning laboratory.

Information-regularized off-policy TD learning with its baselines, exact
planning oracles, the noisy gridworld and cliff-walking benchmarks, and a
seeded experiment harness.
"""

from .environments import (
    FixedUnit,
    GaussianUnit,
    GeneratedMeans,
    GridMap,
    MapError,
    build_cliff,
    build_gridworld,
    default_cliff_map,
    default_gridworld_map,
    parse_map,
)
from .exploration import EpsilonGreedy, UniformIID, epsilon_greedy_row, next_experience
from .learners import (
    ConstantBeta,
    InverseBellmanError,
    LearnerState,
    LinearBeta,
    TransitionSample,
    alpha,
    beta_at,
    greedy_value,
    make_learner,
    update,
)
from .mdp import CostModel, StochasticPolicy, TabularMdp, sample_transition, uniform_policy, validate_mdp
from .metrics import (
    empirical_bias,
    jensen_bias_demo,
    mean_abs_error,
    policy_suboptimality,
)
from .oracle import (
    free_energy,
    free_energy_row,
    policy_evaluation,
    regularized_policy_evaluation,
    soft_bellman,
    soft_policy,
    soft_value_iteration,
    value_iteration,
)
from .rng import RandomStream, make_stream

__version__ = "0.1.0"
