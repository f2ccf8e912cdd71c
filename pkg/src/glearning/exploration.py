"""Experience streams: i.i.d. uniform pairs, or online epsilon-greedy interaction."""

import math
from dataclasses import dataclass
from typing import Optional

from .learners import TransitionSample
from .mdp import sample_transition

__all__ = ["UniformIID", "EpsilonGreedy", "epsilon_greedy_row", "next_experience"]


@dataclass
class UniformIID:
    """Uniform non-terminal state and uniform action, independent each step."""

    _states: Optional[list] = None


@dataclass
class EpsilonGreedy:
    epsilon: float
    start_state: int = 0
    cursor: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


def epsilon_greedy_row(table_row, epsilon):
    """1 - epsilon on the lowest-index argmin plus epsilon / |A| everywhere.

    The greedy entry is the correctly rounded ``1 - sum(others)``, so the
    exact sum of the returned floats rounds to 1 (``math.fsum(row) == 1``).
    ``epsilon == 1`` returns exactly ``[1/n] * n``, the uniform prior row.
    """
    n = len(table_row)
    share = epsilon / n
    if epsilon == 1.0:
        return [share] * n
    row = [share] * n
    best = list(table_row).index(min(table_row))
    row[best] = math.fsum([1.0] + [-share] * (n - 1))
    return row


def next_experience(regime, m, learner, rng):
    if isinstance(regime, UniformIID):
        states = regime._states
        if states is None:
            states = regime._states = m.nonterminal.tolist()
        s = states[rng.integer(len(states))]
        a = rng.integer(m.n_actions)
    else:
        s = regime.start_state if regime.cursor is None else regime.cursor
        if rng.uniform() < regime.epsilon:
            a = rng.integer(m.n_actions)
        else:
            row = learner.table[s]
            a = row.index(min(row))
    c, s_next = sample_transition(m, rng, s, a)
    terminal = m.sampler()[1][s_next]
    if isinstance(regime, EpsilonGreedy):
        regime.cursor = regime.start_state if terminal else s_next
    return TransitionSample(s, a, c, s_next, terminal)
