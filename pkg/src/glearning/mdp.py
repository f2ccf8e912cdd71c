"""Tabular MDP model: transitions, cost model, discount and terminal mask.

The whole library is cost-minimizing.  Terminal states are absorbing and
cost nothing; every downstream value computation treats the value of a
terminal successor as exactly zero.
"""

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CostModel",
    "StochasticPolicy",
    "TabularMdp",
    "ValidationReport",
    "validate_mdp",
    "expected_cost",
    "sample_transition",
    "uniform_policy",
]

ROW_TOL = 1e-12


@dataclass(frozen=True)
class CostModel:
    """Per-(s, a) Gaussian cost; ``std == 0`` is the deterministic case."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def deterministic(cls, mean):
        mean = np.asarray(mean, dtype=float)
        return cls(mean, np.zeros_like(mean))

    @classmethod
    def gaussian(cls, mean, std):
        mean = np.asarray(mean, dtype=float)
        std = np.broadcast_to(np.asarray(std, dtype=float), mean.shape).copy()
        return cls(mean, std)


@dataclass(frozen=True)
class StochasticPolicy:
    """Row-stochastic table ``probs[s, a]``; also used for the prior."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise ValueError("policy table must be 2-D (states x actions)")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("policy entries must lie in [0, 1]")
        bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > ROW_TOL)
        if bad.size:
            raise ValueError(f"policy rows {bad.tolist()} do not sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]

    @classmethod
    def one_hot(cls, actions, n_actions):
        actions = np.asarray(actions, dtype=int)
        p = np.zeros((actions.size, n_actions))
        p[np.arange(actions.size), actions] = 1.0
        return cls(p)


def uniform_policy(n_states, n_actions):
    return StochasticPolicy(np.full((n_states, n_actions), 1.0 / n_actions))


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP with ``transition[s, a, s']`` and a per-pair cost model.

    Construction does not validate; call :func:`validate_mdp` for a report.
    """

    transition: np.ndarray
    cost: CostModel
    gamma: float
    terminal: np.ndarray = None
    labels: tuple = None
    _sampler: list = field(default=None, init=False, repr=False, compare=False)
    _continuation: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=float)
        object.__setattr__(self, "transition", p)
        if self.terminal is None:
            object.__setattr__(self, "terminal", np.zeros(p.shape[0], dtype=bool))
        else:
            object.__setattr__(self, "terminal", np.asarray(self.terminal, dtype=bool))

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def n_actions(self):
        return self.transition.shape[1]

    @property
    def nonterminal(self):
        return np.flatnonzero(~self.terminal)

    def continuation(self):
        """Transition table with every arrival at a terminal state zeroed (read-only, cached)."""
        if self._continuation is None:
            p = self.transition * (~self.terminal)[None, None, :]
            p.flags.writeable = False
            object.__setattr__(self, "_continuation", p)
        return self._continuation

    def sampler(self):
        """Per-(s, a) ``(support, cumulative probs, cost mean, cost std)`` as Python objects.

        Support and cumulative probabilities run in ascending next-state order.
        """
        if self._sampler is None:
            table = []
            for s in range(self.n_states):
                row = []
                for a in range(self.n_actions):
                    probs = self.transition[s, a]
                    support = np.flatnonzero(probs > 0).tolist()
                    cum, acc = [], 0.0
                    for j in support:
                        acc += float(probs[j])
                        cum.append(acc)
                    row.append((support, cum, float(self.cost.mean[s, a]), float(self.cost.std[s, a])))
                table.append(row)
            object.__setattr__(self, "_sampler", (table, self.terminal.tolist()))
        return self._sampler


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_mdp(m):
    """Check every model invariant; violations are returned, never raised."""
    out = []
    p = m.transition
    if p.ndim != 3 or p.shape[0] != p.shape[2]:
        return ValidationReport([f"transition table has shape {p.shape}, expected (S, A, S)"])
    S, A = p.shape[:2]
    if not (0.0 <= m.gamma < 1.0):
        out.append(f"discount out of range: gamma={m.gamma}")
    if m.cost.mean.shape != (S, A) or m.cost.std.shape != (S, A):
        out.append(f"cost model shape must be ({S}, {A})")
    elif np.any(m.cost.std < 0):
        for s, a in zip(*np.nonzero(m.cost.std < 0)):
            out.append(f"negative cost std at (s={s}, a={a})")
    if m.terminal.shape != (S,):
        out.append(f"terminal mask shape must be ({S},)")
        return ValidationReport(out)
    for s, a, j in zip(*np.nonzero((p < 0) | (p > 1))):
        out.append(f"probability out of [0,1] at (s={s}, a={a}, s'={j})")
    sums = p.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_TOL)):
        out.append(f"row (s={s}, a={a}) sums to {sums[s, a]!r}, not 1")
    for s in np.flatnonzero(m.terminal):
        for a in range(A):
            if p[s, a, s] != 1.0:
                out.append(f"terminal state {s} is not absorbing under a={a}")
            if m.cost.mean.shape == (S, A) and m.cost.mean[s, a] != 0.0:
                out.append(f"terminal state {s} has nonzero expected cost under a={a}")
    return ValidationReport(out)


def _check_index(m, s, a):
    if not (0 <= s < m.n_states):
        raise IndexError(f"state {s} out of range [0, {m.n_states})")
    if not (0 <= a < m.n_actions):
        raise IndexError(f"action {a} out of range [0, {m.n_actions})")


def expected_cost(m, s, a):
    _check_index(m, s, a)
    return float(m.cost.mean[s, a])


def sample_transition(m, rng, s, a):
    """Draw ``(cost, next_state)``; the next state by inverse CDF in index order."""
    if not (0 <= s < m.n_states and 0 <= a < m.n_actions):
        _check_index(m, s, a)
    table, terminal = m.sampler()
    if terminal[s]:
        return 0.0, s
    support, cum, mean, std = table[s][a]
    i = bisect_right(cum, rng.uniform())
    s_next = support[i] if i < len(support) else support[-1]
    cost = mean if std == 0.0 else mean + std * rng.normal()
    return cost, s_next
