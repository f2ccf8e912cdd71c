"""Evaluation quantities computed from learner snapshots against the exact oracle.

All averages run over runs and over the *evaluated* states of each run.  By
default the evaluated states are the non-terminal states of the model (walls
are not states at all).
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .oracle import policy_evaluation

__all__ = [
    "JensenResult",
    "MetricPoint",
    "MetricSeries",
    "empirical_bias",
    "mean_abs_error",
    "policy_suboptimality",
    "bellman_error_average",
    "jensen_bias_demo",
    "VisitHistogram",
    "visit_histogram",
]


@dataclass(frozen=True)
class MetricPoint:
    iteration: int
    bias: float
    mean_abs_error: float
    policy_suboptimality: float
    bellman_error_avg: float
    cumulative_cost: float = 0.0


class JensenResult(NamedTuple):
    mean_min: float
    true_min: float
    sample_std: float


@dataclass
class MetricSeries:
    algorithm: str
    run: int
    points: list = field(default_factory=list)
    visits: object = None

    def append(self, point):
        if self.points and point.iteration <= self.points[-1].iteration:
            raise ValueError("iterations must be strictly increasing")
        self.points.append(point)

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points])

    @property
    def iterations(self):
        return [p.iteration for p in self.points]


def _stack(snapshots, v_stars):
    if len(snapshots) != len(v_stars):
        raise ValueError(f"{len(snapshots)} snapshots but {len(v_stars)} reference tables")
    if not snapshots:
        raise ValueError("need at least one run")
    v = [np.asarray(x, dtype=float) for x in snapshots]
    ref = [np.asarray(x, dtype=float) for x in v_stars]
    for a, b in zip(v, ref):
        if a.shape != b.shape:
            raise ValueError(f"state count mismatch: {a.shape} vs {b.shape}")
    return v, ref


def _mean_over(diffs):
    total = sum(float(d.sum()) for d in diffs)
    count = sum(d.size for d in diffs)
    return total / count


def empirical_bias(snapshots, v_stars):
    """Mean of ``V_t - V*`` over runs and states (signed)."""
    v, ref = _stack(snapshots, v_stars)
    return _mean_over([a - b for a, b in zip(v, ref)])


def mean_abs_error(snapshots, v_stars):
    v, ref = _stack(snapshots, v_stars)
    return _mean_over([np.abs(a - b) for a, b in zip(v, ref)])


def policy_suboptimality(mdps, policies, v_stars, states=None):
    """Mean of ``V^pi - V*`` with ``V^pi`` from exact policy evaluation.

    ``states`` optionally restricts the average (one index array shared by
    all runs).
    """
    if not (len(mdps) == len(policies) == len(v_stars)):
        raise ValueError("mdps, policies and v_stars must have equal lengths")
    diffs = []
    for m, pi, v_star in zip(mdps, policies, v_stars):
        _, v_pi = policy_evaluation(m, pi)
        d = v_pi - np.asarray(v_star, dtype=float)
        diffs.append(d if states is None else d[states])
    return _mean_over(diffs)


def bellman_error_average(errors, smoothing=0.999, absolute=False):
    """Exponentially smoothed Bellman errors; the first value seeds the average.

    The signed average is what tends to zero once the estimate sits at its
    fixed point.  ``absolute=True`` smooths ``|error|`` instead, which levels
    off at the noise floor of the targets.
    """
    if not 0 < smoothing < 1:
        raise ValueError("smoothing must lie in (0, 1)")
    out = []
    avg = None
    for e in errors:
        if absolute:
            e = abs(e)
        avg = e if avg is None else smoothing * avg + (1.0 - smoothing) * e
        out.append(avg)
    return np.array(out)


def jensen_bias_demo(q_star_row, noise_std, n_samples, rng):
    """Average of ``min_a`` over Gaussian-perturbed copies of a row, and the true min.

    ``rng`` is a :class:`numpy.random.Generator`.  The result also carries the
    sample standard deviation of the per-sample minima.
    """
    row = np.asarray(q_star_row, dtype=float)
    if row.size < 2:
        raise ValueError("row needs at least two actions")
    true_min = float(row.min())
    if noise_std == 0:
        return JensenResult(true_min, true_min, 0.0)
    mins = np.empty(n_samples)
    chunk = 1 << 16
    for lo in range(0, n_samples, chunk):
        hi = min(lo + chunk, n_samples)
        noisy = row + noise_std * rng.standard_normal((hi - lo, row.size))
        mins[lo:hi] = noisy.min(axis=1)
    spread = float(mins.std(ddof=1)) if n_samples > 1 else math.nan
    return JensenResult(float(mins.mean()), true_min, spread)


@dataclass
class VisitHistogram:
    states: Counter = field(default_factory=Counter)
    transitions: Counter = field(default_factory=Counter)

    def add(self, s, s_next):
        self.states[s] += 1
        self.transitions[(s, s_next)] += 1

    @property
    def total(self):
        return sum(self.states.values())

    def state_counts(self, n_states):
        out = np.zeros(n_states, dtype=np.int64)
        for s, n in self.states.items():
            out[s] = n
        return out

    def merge(self, other):
        self.states.update(other.states)
        self.transitions.update(other.transitions)
        return self


def visit_histogram(samples):
    hist = VisitHistogram()
    for x in samples:
        hist.add(x.s, x.s_next)
    return hist
