import numpy as np
import pytest

from glearning.mdp import CostModel, StochasticPolicy, TabularMdp


def random_mdp(rng, n_states=5, n_actions=3, gamma=0.95, std=0.0, sparse=False):
    """Random dense MDP with costs in [0, 2); optional Gaussian cost noise."""
    p = rng.random((n_states, n_actions, n_states))
    if sparse:
        p *= rng.random(p.shape) < 0.5
        p[..., 0] += 1e-3
    p /= p.sum(axis=2, keepdims=True)
    mean = 2.0 * rng.random((n_states, n_actions))
    return TabularMdp(p, CostModel.gaussian(mean, std), gamma)


def random_policy(rng, n_states, n_actions):
    w = rng.random((n_states, n_actions)) + 0.05
    return StochasticPolicy(w / w.sum(axis=1, keepdims=True))


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
