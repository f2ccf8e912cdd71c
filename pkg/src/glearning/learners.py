"""Online tabular TD learners sharing one update interface.

G-learning plus the baselines it is compared against: Q-learning,
Q^rho-learning (update towards the prior), Psi-learning, Double-Q-learning,
the consistent Bellman operator and Expected-SARSA.

Tables are kept as lists of Python float rows; a single update touches a
handful of scalars and numpy dispatch would dominate its cost.  Use
:meth:`LearnerState.values` for an array view.

Every update follows the same bookkeeping: increment the visit count of the
updated pair, take ``alpha = n ** -omega``, blend
``(1 - alpha) * old + alpha * target``, fold ``target - old`` into the
signed and absolute running Bellman-error averages and advance the global
step ``t``.  The absolute average drives :class:`InverseBellmanError`.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .oracle import free_energy_row

__all__ = [
    "ALGORITHMS",
    "TransitionSample",
    "LinearBeta",
    "ConstantBeta",
    "InverseBellmanError",
    "LearnerState",
    "alpha",
    "beta_at",
    "make_learner",
    "q_update",
    "qrho_update",
    "g_update",
    "psi_update",
    "double_q_update",
    "consistent_bellman_update",
    "expected_sarsa_update",
    "update",
    "greedy_value",
    "prior_average",
]

ALGORITHMS = ("q", "qrho", "g", "psi", "double_q", "consistent", "expected_sarsa")
BELLMAN_SMOOTHING = 0.999


class TransitionSample(NamedTuple):
    s: int
    a: int
    c: float
    s_next: int
    terminal: bool = False


@dataclass(frozen=True)
class LinearBeta:
    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("linear beta coefficient k must be positive")


@dataclass(frozen=True)
class ConstantBeta:
    beta: float

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("constant beta must be nonnegative")


@dataclass(frozen=True)
class InverseBellmanError:
    """beta proportional to the inverse running Bellman error."""

    scale: float
    smoothing: float = BELLMAN_SMOOTHING

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not 0 < self.smoothing < 1:
            raise ValueError("smoothing must lie in (0, 1)")


def alpha(n, omega=0.8):
    if n < 1:
        raise ValueError(f"visit count must be >= 1, got {n}")
    return n ** -omega


def beta_at(schedule, t, bellman_error_avg=None):
    if isinstance(schedule, LinearBeta):
        return schedule.k * t
    if isinstance(schedule, ConstantBeta):
        return schedule.beta
    if isinstance(schedule, InverseBellmanError):
        # no error observed yet: stay at the prior
        if bellman_error_avg is None:
            return 0.0
        return schedule.scale / max(bellman_error_avg, 1e-12)
    raise TypeError(f"unknown beta schedule {schedule!r}")


def prior_average(weights, row):
    """``sum(w * q)`` in index order; shared by every expectation-style target."""
    return sum([w * q for w, q in zip(weights, row)])


def _argmin(row):
    return row.index(min(row))


@dataclass
class LearnerState:
    algorithm: str
    table: list
    counts: list
    gamma: float
    omega: float = 0.8
    rho: Optional[list] = None
    beta: object = None
    secondary: Optional[list] = None
    secondary_counts: Optional[list] = None
    t: int = 0
    bellman_avg: Optional[float] = None
    bellman_signed_avg: Optional[float] = None
    smoothing: float = BELLMAN_SMOOTHING
    last_beta: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def n_states(self):
        return len(self.table)

    @property
    def n_actions(self):
        return len(self.table[0])

    def values(self, which="primary"):
        if which == "secondary":
            return np.array(self.secondary, dtype=float)
        return np.array(self.table, dtype=float)


def make_learner(algorithm, n_states, n_actions, gamma, *, rho=None, omega=0.8, beta=None,
                 smoothing=BELLMAN_SMOOTHING, initial=0.0):
    """Fresh learner with all tables at ``initial``; ``rho`` defaults to uniform."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if not 0.5 < omega <= 1:
        raise ValueError("omega must lie in (0.5, 1]")
    if rho is None:
        rho = [[1.0 / n_actions] * n_actions for _ in range(n_states)]
    else:
        rho = np.asarray(getattr(rho, "probs", rho), dtype=float).tolist()
    if algorithm == "g" and beta is None:
        raise ValueError("G-learning needs a beta schedule")

    def zeros():
        return [[float(initial)] * n_actions for _ in range(n_states)]

    def no_visits():
        return [[0] * n_actions for _ in range(n_states)]

    state = LearnerState(algorithm, zeros(), no_visits(), gamma, omega, rho, beta, smoothing=smoothing)
    if algorithm == "double_q":
        state.secondary = zeros()
        state.secondary_counts = no_visits()
    return state


def _blend(state, table, counts, s, a, target):
    n = counts[s][a] + 1
    counts[s][a] = n
    step = n ** -state.omega
    row = table[s]
    old = row[a]
    row[a] = (1.0 - step) * old + step * target
    _record(state, target - old)


def _record(state, error):
    lam = state.smoothing
    avg = state.bellman_avg
    state.bellman_avg = abs(error) if avg is None else lam * avg + (1.0 - lam) * abs(error)
    avg = state.bellman_signed_avg
    state.bellman_signed_avg = error if avg is None else lam * avg + (1.0 - lam) * error
    state.t += 1


def q_update(state, x):
    Q = state.table
    boot = 0.0 if x.terminal else min(Q[x.s_next])
    _blend(state, Q, state.counts, x.s, x.a, x.c + state.gamma * boot)
    return state


def qrho_update(state, x):
    Q = state.table
    boot = 0.0 if x.terminal else prior_average(state.rho[x.s_next], Q[x.s_next])
    _blend(state, Q, state.counts, x.s, x.a, x.c + state.gamma * boot)
    return state


def g_update(state, x):
    beta = beta_at(state.beta, state.t, state.bellman_avg)
    state.last_beta = beta
    G = state.table
    boot = 0.0 if x.terminal else free_energy_row(G[x.s_next], state.rho[x.s_next], beta)
    _blend(state, G, state.counts, x.s, x.a, x.c + state.gamma * boot)
    return state


def psi_bar(state, s):
    return free_energy_row(state.table[s], state.rho[s], 1.0)


def psi_update(state, x):
    Psi = state.table
    next_bar = 0.0 if x.terminal else psi_bar(state, x.s_next)
    increment = x.c + state.gamma * next_bar - psi_bar(state, x.s)
    n = state.counts[x.s][x.a] + 1
    state.counts[x.s][x.a] = n
    Psi[x.s][x.a] += n ** -state.omega * increment
    _record(state, increment)
    return state


def double_q_update(state, x, rng):
    if rng.uniform() < 0.5:
        upd, upd_counts, other = state.table, state.counts, state.secondary
    else:
        upd, upd_counts, other = state.secondary, state.secondary_counts, state.table
    if x.terminal:
        boot = 0.0
    else:
        boot = other[x.s_next][_argmin(upd[x.s_next])]
    _blend(state, upd, upd_counts, x.s, x.a, x.c + state.gamma * boot)
    return state


def consistent_bellman_update(state, x):
    Q = state.table
    if x.terminal:
        boot = 0.0
    elif x.s_next == x.s:
        boot = Q[x.s][x.a]
    else:
        boot = min(Q[x.s_next])
    _blend(state, Q, state.counts, x.s, x.a, x.c + state.gamma * boot)
    return state


def expected_sarsa_update(state, x, exploration_row):
    Q = state.table
    boot = 0.0 if x.terminal else prior_average(exploration_row, Q[x.s_next])
    _blend(state, Q, state.counts, x.s, x.a, x.c + state.gamma * boot)
    return state


def update(state, x, rng=None, exploration_row=None):
    """Dispatch on ``state.algorithm``.

    Double-Q needs ``rng``; Expected-SARSA needs the exploration policy's
    row at ``x.s_next``.
    """
    alg = state.algorithm
    if alg == "g":
        return g_update(state, x)
    if alg == "q":
        return q_update(state, x)
    if alg == "qrho":
        return qrho_update(state, x)
    if alg == "psi":
        return psi_update(state, x)
    if alg == "double_q":
        return double_q_update(state, x, rng)
    if alg == "consistent":
        return consistent_bellman_update(state, x)
    if alg == "expected_sarsa":
        return expected_sarsa_update(state, x, exploration_row)
    raise ValueError(f"unknown algorithm {alg!r}")


def greedy_value(state, *, double_q_mean=False, use_psi_bar=False):
    """``min_a`` of the learner's primary table (see keyword flags for variants)."""
    if state.algorithm == "double_q" and double_q_mean:
        table = 0.5 * (state.values() + state.values("secondary"))
    else:
        table = state.values()
    if state.algorithm == "psi" and use_psi_bar:
        return np.array([psi_bar(state, s) for s in range(state.n_states)])
    return table.min(axis=1)


def greedy_table(state, *, double_q_mean=False):
    if state.algorithm == "double_q" and double_q_mean:
        return 0.5 * (state.values() + state.values("secondary"))
    return state.values()
