import numpy as np
import pytest
from scipy import stats

from glearning.mdp import (
    CostModel,
    StochasticPolicy,
    TabularMdp,
    expected_cost,
    sample_transition,
    uniform_policy,
    validate_mdp,
)
from glearning.rng import RandomStream

from conftest import random_mdp


def two_state(gamma=0.95, first_row=(0.0, 1.0)):
    p = np.zeros((2, 1, 2))
    p[0, 0] = first_row
    p[1, 0, 1] = 1.0
    return TabularMdp(p, CostModel.deterministic([[1.0], [0.0]]), gamma, [False, True])


class TestValidate:
    def test_ok(self):
        report = validate_mdp(two_state())
        assert report.ok and report.violations == []

    def test_short_row_names_pair(self):
        report = validate_mdp(two_state(first_row=(0.0, 0.9)))
        assert not report.ok
        assert any("(s=0, a=0)" in v for v in report.violations)

    def test_discount_out_of_range(self):
        report = validate_mdp(two_state(gamma=1.0))
        assert any("discount out of range" in v for v in report.violations)

    def test_terminal_must_be_absorbing_and_free(self):
        p = np.zeros((2, 1, 2))
        p[:, 0, 0] = 1.0
        m = TabularMdp(p, CostModel.deterministic([[1.0], [2.0]]), 0.9, [False, True])
        msgs = validate_mdp(m).violations
        assert any("not absorbing" in v for v in msgs)
        assert any("nonzero expected cost" in v for v in msgs)

    def test_negative_probability_and_std(self):
        m = TabularMdp(np.ones((1, 1, 1)), CostModel(np.array([[1.0]]), np.array([[-1.0]])), 0.5)
        assert any("negative cost std" in v for v in validate_mdp(m).violations)
        bad = TabularMdp(np.array([[[1.5, -0.5]], [[0.0, 1.0]]]), CostModel.deterministic([[0.0], [0.0]]), 0.5)
        assert any("out of [0,1]" in v for v in validate_mdp(bad).violations)


class TestExpectedCost:
    @pytest.mark.parametrize("model, expected", [
        (CostModel.deterministic([[1.0]]), 1.0),
        (CostModel.gaussian([[1.0]], 2.0), 1.0),
        (CostModel.gaussian([[2.37]], 4.0), 2.37),
    ])
    def test_mean_is_stored_value(self, model, expected):
        m = TabularMdp(np.ones((1, 1, 1)), model, 0.9)
        assert expected_cost(m, 0, 0) == expected

    def test_range_error(self):
        m = two_state()
        with pytest.raises(IndexError):
            expected_cost(m, 2, 0)
        with pytest.raises(IndexError):
            expected_cost(m, 0, 1)


class TestSampleTransition:
    def test_deterministic_row(self):
        p = np.zeros((4, 1, 4))
        p[:, 0, 3] = 1.0
        m = TabularMdp(p, CostModel.deterministic(np.ones((4, 1))), 0.9)
        rng = RandomStream(0)
        for s in range(3):
            assert sample_transition(m, rng, s, 0) == (1.0, 3)

    def test_terminal_returns_itself(self):
        m = two_state()
        assert sample_transition(m, RandomStream(1), 1, 0) == (0.0, 1)

    def test_gaussian_moments(self):
        m = TabularMdp(np.ones((1, 1, 1)), CostModel.gaussian([[1.0]], 2.0), 0.9)
        rng = RandomStream(2024)
        costs = np.array([sample_transition(m, rng, 0, 0)[0] for _ in range(100_000)])
        assert abs(costs.mean() - 1.0) < 0.03
        assert abs(costs.std() - 2.0) < 0.05

    def test_zero_std_gives_exact_mean(self):
        m = TabularMdp(np.ones((1, 1, 1)), CostModel.gaussian([[1.25]], 0.0), 0.9)
        rng = RandomStream(5)
        assert all(sample_transition(m, rng, 0, 0)[0] == 1.25 for _ in range(1000))

    def test_inverse_cdf_frequencies(self):
        rng_np = np.random.default_rng(3)
        m = random_mdp(rng_np, n_states=6, n_actions=2, sparse=True)
        rng = RandomStream(99)
        for s, a in [(0, 0), (3, 1), (5, 0)]:
            n = 100_000
            draws = np.array([sample_transition(m, rng, s, a)[1] for _ in range(n)])
            probs = m.transition[s, a]
            support = probs > 0
            observed = np.bincount(draws, minlength=m.n_states)
            assert observed[~support].sum() == 0
            _, pvalue = stats.chisquare(observed[support], n * probs[support])
            assert pvalue > 0.001

    def test_inverse_cdf_is_index_ordered(self):
        p = np.zeros((1, 1, 3))
        p[0, 0] = [0.2, 0.0, 0.8]
        m = TabularMdp(p, CostModel.deterministic([[0.0]]), 0.9)

        class Fixed:
            def __init__(self, u):
                self.u = u

            def uniform(self):
                return self.u

        assert sample_transition(m, Fixed(0.0), 0, 0)[1] == 0
        assert sample_transition(m, Fixed(0.1999), 0, 0)[1] == 0
        assert sample_transition(m, Fixed(0.2), 0, 0)[1] == 2
        assert sample_transition(m, Fixed(0.9999999), 0, 0)[1] == 2

    def test_same_seed_same_sequence(self):
        m = random_mdp(np.random.default_rng(0), std=1.0)
        a, b = RandomStream(7), RandomStream(7)
        seq_a = [sample_transition(m, a, i % 5, i % 3) for i in range(2000)]
        seq_b = [sample_transition(m, b, i % 5, i % 3) for i in range(2000)]
        assert seq_a == seq_b


class TestPolicy:
    def test_uniform(self):
        pi = uniform_policy(3, 4)
        assert np.allclose(pi.probs, 0.25)

    def test_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            StochasticPolicy(np.array([[0.5, 0.4]]))
        with pytest.raises(ValueError):
            StochasticPolicy(np.array([[1.5, -0.5]]))

    def test_one_hot(self):
        pi = StochasticPolicy.one_hot([2, 0], 3)
        assert pi.probs.tolist() == [[0, 0, 1], [1, 0, 0]]
