"""Exact planning against a known model.

Hard and soft value iteration, plain and information-regularized policy
evaluation, and the soft-min (free energy) primitives they share.  Value
tables are numpy arrays: ``(n_states, n_actions)`` for action values,
``(n_states,)`` for state values.

``beta == 0`` and ``beta == inf`` are exact limits with their own code paths:
the prior average and the hard minimum over the prior's support.
"""

import math
from typing import NamedTuple, Optional

import numpy as np

from .mdp import StochasticPolicy

__all__ = [
    "free_energy",
    "free_energy_row",
    "soft_policy",
    "greedy_actions",
    "greedy_policy",
    "bellman_optimality",
    "value_iteration",
    "policy_evaluation",
    "soft_bellman",
    "soft_value_iteration",
    "RegularizedEvaluation",
    "regularized_policy_evaluation",
]

DIRECT_SOLVE_LIMIT = 10_000
EVAL_TOL = 1e-12
MAX_SWEEPS = 1_000_000


def _check_beta(beta):
    if not beta >= 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")


def free_energy(values, rho, beta):
    """Soft-min ``-(1/beta) log sum_a rho_a exp(-beta * values_a)`` along the last axis."""
    _check_beta(beta)
    values = np.asarray(values, dtype=float)
    rho = np.asarray(rho, dtype=float)
    support = rho > 0
    if beta == 0:
        return np.where(support, rho * values, 0.0).sum(axis=-1)
    full = support.all()
    low = (values if full else np.where(support, values, np.inf)).min(axis=-1)
    if math.isinf(beta):
        return low
    shifted = values - low[..., None]
    if not full:
        shifted = np.where(support, shifted, 0.0)
    if rho.shape != shifted.shape:
        rho, shifted = np.broadcast_arrays(rho, shifted)
    # z - 1 through expm1 stays accurate when beta * spread is tiny;
    # off-support entries have rho = 0 and shifted = 0, so they add nothing
    d = (rho * np.expm1(-beta * shifted)).sum(axis=-1)
    if d.min() > -0.5:
        out = np.array(low - np.log1p(d) / beta)
    else:
        # z near 0: log1p(d) loses digits, log(z) does not
        far = d <= -0.5
        out = np.array(low - np.log1p(np.where(far, 0.0, d)) / beta)
        z = (rho[far] * np.exp(-beta * shifted[far])).sum(axis=-1)
        out[far] = low[far] - np.log(z) / beta
    # second-order expansion, exact to rounding once beta * spread < 1e-8
    spread = shifted.max(axis=-1)
    if beta * spread.min() < 1e-8:
        small = beta * spread < 1e-8
        r, x = rho[small], shifted[small]
        m1 = (r * x).sum(axis=-1)
        m2 = (r * x * x).sum(axis=-1)
        out[small] = low[small] + m1 - 0.5 * beta * (m2 - m1 * m1)
    return out[()]


def free_energy_row(g_row, rho_row, beta):
    """Scalar soft-min of one row; pure Python, used on the learners' hot path.

    ``beta == 0`` gives ``sum(rho * g)`` summed left to right, the exact same
    arithmetic as a prior-weighted expectation.
    """
    if beta == 0:
        return sum([p * g for p, g in zip(rho_row, g_row)])
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    low = min([g for p, g in zip(rho_row, g_row) if p > 0])
    if beta == math.inf:
        return low
    if beta * (max(g_row) - low) < 1e-8:
        return _small_beta_row(g_row, rho_row, beta, low)
    expm1 = math.expm1
    # z - 1 through expm1 stays accurate when beta * spread is tiny
    d = sum([p * expm1(-beta * (g - low)) for p, g in zip(rho_row, g_row) if p > 0])
    if d > -0.5:
        return low - math.log1p(d) / beta
    exp = math.exp
    z = sum([p * exp(-beta * (g - low)) for p, g in zip(rho_row, g_row) if p > 0])
    return low - math.log(z) / beta


def _small_beta_row(g_row, rho_row, beta, low):
    # mean - beta/2 * variance; the next term is O(beta^2 spread^3)
    m1 = m2 = 0.0
    for p, g in zip(rho_row, g_row):
        if p > 0:
            x = g - low
            m1 += p * x
            m2 += p * x * x
    return low + m1 - 0.5 * beta * (m2 - m1 * m1)


def soft_policy(G, rho, beta):
    """Soft-min policy ``rho * exp(-beta G)`` normalized per state."""
    _check_beta(beta)
    rho_p = rho.probs if isinstance(rho, StochasticPolicy) else np.asarray(rho, dtype=float)
    G = np.asarray(G, dtype=float)
    if beta == 0:
        return StochasticPolicy(rho_p.copy())
    support = rho_p > 0
    low = np.where(support, G, np.inf).min(axis=1, keepdims=True)
    if math.isinf(beta):
        w = np.where(support & (G == low), rho_p, 0.0)
    else:
        w = np.where(support, rho_p * np.exp(-beta * (G - low)), 0.0)
    return StochasticPolicy(_renormalize(w))


def _renormalize(w):
    # keeps rows within the 1e-12 row-sum contract after division rounding
    w = w / w.sum(axis=1, keepdims=True)
    err = 1.0 - w.sum(axis=1)
    top = w.argmax(axis=1)
    w[np.arange(w.shape[0]), top] += err
    return w


def greedy_actions(table):
    """Lowest-index argmin per state."""
    return np.argmin(np.asarray(table), axis=1)


def greedy_policy(table):
    table = np.asarray(table)
    return StochasticPolicy.one_hot(greedy_actions(table), table.shape[1])


def bellman_optimality(m, Q):
    P = m.continuation()
    return m.cost.mean + m.gamma * P @ np.asarray(Q).min(axis=1)


def value_iteration(m, tol=1e-10):
    """Hard value iteration from zero; returns ``(Q*, V*)``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    P = m.continuation()
    c = m.cost.mean
    Q = np.zeros((m.n_states, m.n_actions))
    for _ in range(MAX_SWEEPS):
        Q_new = c + m.gamma * P @ Q.min(axis=1)
        delta = np.max(np.abs(Q_new - Q))
        Q = Q_new
        if delta <= tol:
            break
    return Q, Q.min(axis=1)


def _policy_matrix(m, pi):
    P = m.continuation()
    c_pi = np.einsum("sa,sa->s", pi, m.cost.mean)
    P_pi = np.einsum("sa,sat->st", pi, P)
    return P, c_pi, P_pi


def _solve(M, rhs, gamma):
    """Solve ``x = rhs + gamma * M x``."""
    n = rhs.shape[0]
    if n <= DIRECT_SOLVE_LIMIT:
        return np.linalg.solve(np.eye(n) - gamma * M, rhs)
    x = np.zeros(n)
    for _ in range(MAX_SWEEPS):
        x_new = rhs + gamma * M @ x
        if np.max(np.abs(x_new - x)) <= EVAL_TOL:
            return x_new
        x = x_new
    return x


def policy_evaluation(m, pi):
    """Exact ``(Q^pi, V^pi)`` for a stochastic policy."""
    probs = pi.probs if isinstance(pi, StochasticPolicy) else np.asarray(pi, dtype=float)
    P, c_pi, P_pi = _policy_matrix(m, probs)
    V = _solve(P_pi, c_pi, m.gamma)
    Q = m.cost.mean + m.gamma * P @ V
    return Q, V


def soft_bellman(m, rho, beta, G):
    """One application of the soft Bellman operator to ``G``."""
    rho_p = rho.probs if isinstance(rho, StochasticPolicy) else np.asarray(rho, dtype=float)
    F = free_energy(G, rho_p, beta)
    return m.cost.mean + m.gamma * m.continuation() @ F


def soft_value_iteration(m, rho, beta, tol=1e-10):
    """Iterate :func:`soft_bellman` from zero until the sup-norm change is at most ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    _check_beta(beta)
    rho_p = rho.probs if isinstance(rho, StochasticPolicy) else np.asarray(rho, dtype=float)
    P = m.continuation()
    c = m.cost.mean
    G = np.zeros((m.n_states, m.n_actions))
    for _ in range(MAX_SWEEPS):
        G_new = c + m.gamma * P @ free_energy(G, rho_p, beta)
        delta = np.max(np.abs(G_new - G))
        G = G_new
        if delta <= tol:
            break
    return G


class RegularizedEvaluation(NamedTuple):
    g: Optional[np.ndarray]
    f: Optional[np.ndarray]
    info: np.ndarray
    v: np.ndarray


def regularized_policy_evaluation(m, pi, rho, beta):
    """Free energy, information-to-go and cost-to-go of ``pi`` relative to ``rho``.

    Returns ``g`` and ``f`` as ``None`` when ``beta == 0``, where the free
    energy is undefined.  Terminal states carry no information cost.
    """
    _check_beta(beta)
    pi_p = pi.probs if isinstance(pi, StochasticPolicy) else np.asarray(pi, dtype=float)
    rho_p = rho.probs if isinstance(rho, StochasticPolicy) else np.asarray(rho, dtype=float)
    bad = np.argwhere((pi_p > 0) & (rho_p == 0))
    if bad.size:
        s, a = bad[0]
        raise ValueError(f"policy puts mass on (s={s}, a={a}) outside the prior's support")

    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(pi_p > 0, np.log(pi_p / rho_p), 0.0)
    kl = (pi_p * log_ratio).sum(axis=1)
    kl[m.terminal] = 0.0

    P, _, P_pi = _policy_matrix(m, pi_p)
    info = _solve(P_pi, kl, m.gamma)
    _, V = policy_evaluation(m, pi_p)
    if beta == 0:
        return RegularizedEvaluation(None, None, info, V)
    if math.isinf(beta):
        Q, _ = policy_evaluation(m, pi_p)
        return RegularizedEvaluation(Q, V.copy(), info, V)

    S, A = pi_p.shape
    k = m.cost.mean + (m.gamma / beta) * P @ kl
    # (s, a) -> (s', a') transition under pi
    M = (P[:, :, :, None] * pi_p[None, None, :, :]).reshape(S * A, S * A)
    G = _solve(M, k.reshape(-1), m.gamma).reshape(S, A)
    F = (pi_p * (log_ratio / beta + G)).sum(axis=1)
    F[m.terminal] = 0.0
    return RegularizedEvaluation(G, F, info, V)
