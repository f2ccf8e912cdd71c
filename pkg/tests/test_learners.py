import copy
import math

import numpy as np
import pytest

from glearning.exploration import UniformIID, epsilon_greedy_row, next_experience
from glearning.learners import (
    ConstantBeta,
    InverseBellmanError,
    LinearBeta,
    TransitionSample,
    alpha,
    beta_at,
    consistent_bellman_update,
    double_q_update,
    expected_sarsa_update,
    g_update,
    greedy_value,
    make_learner,
    psi_update,
    q_update,
    qrho_update,
    update,
)
from glearning.mdp import sample_transition, uniform_policy
from glearning.oracle import free_energy_row, policy_evaluation, soft_bellman, soft_value_iteration, value_iteration
from glearning.rng import RandomStream

from conftest import random_mdp

G_TARGET = 2.487908211041124
G_NEW = 2.243954105520562
PSI_INCREMENT = 0.02613618969683063
PSI_NEW = 1.0261361896968306


def learner(alg, rows, gamma=0.95, beta=None, omega=0.8, visits=0):
    """Learner over the given table rows; ``visits`` pre-loads every count."""
    st = make_learner(alg, len(rows), len(rows[0]), gamma, beta=beta, omega=omega)
    st.table = [list(map(float, r)) for r in rows]
    st.counts = [[visits] * len(r) for r in rows]
    if st.secondary is not None:
        st.secondary = [list(r) for r in st.table]
        st.secondary_counts = [[visits] * len(r) for r in rows]
    return st


class Coin:
    """Stub stream returning a fixed uniform draw."""

    def __init__(self, u):
        self.u = u

    def uniform(self):
        return self.u


class TestSchedules:
    @pytest.mark.parametrize("n, omega, expected", [(1, 0.8, 1.0), (1024, 0.8, 0.00390625), (4, 1.0, 0.25)])
    def test_alpha(self, n, omega, expected):
        assert alpha(n, omega) == pytest.approx(expected, rel=1e-15)

    def test_alpha_rejects_zero(self):
        with pytest.raises(ValueError):
            alpha(0)

    def test_beta(self):
        assert beta_at(LinearBeta(1e-4), 0) == 0.0
        assert beta_at(LinearBeta(1e-4), 250_000) == pytest.approx(25.0, rel=1e-15)
        assert beta_at(ConstantBeta(3.0), 12345) == 3.0

    def test_inverse_error(self):
        sched = InverseBellmanError(2.0)
        assert beta_at(sched, 5, None) == 0.0
        assert beta_at(sched, 5, 0.5) == 4.0
        assert beta_at(sched, 5, 0.0) == 2e12

    def test_invalid(self):
        with pytest.raises(ValueError):
            LinearBeta(0.0)
        with pytest.raises(ValueError):
            ConstantBeta(-1.0)
        with pytest.raises(TypeError):
            beta_at("linear", 3)


class TestQ:
    def test_gamma_zero(self):
        st = learner("q", [[7.0], [0.0]], gamma=0.0)
        q_update(st, TransitionSample(0, 0, 1.5, 1))
        assert st.table[0][0] == 1.5

    def test_hand_example(self):
        st = learner("q", [[0.0, 0.0], [1.0, 3.0]])
        q_update(st, TransitionSample(0, 1, 1.0, 1))
        assert st.table[0][1] == pytest.approx(1.95, abs=1e-15)
        assert st.counts[0][1] == 1 and st.t == 1

    def test_terminal_drops_bootstrap(self):
        st = learner("q", [[0.0], [9.0]])
        q_update(st, TransitionSample(0, 0, 1.0, 1, terminal=True))
        assert st.table[0][0] == 1.0

    def test_qrho_uniform(self):
        st = learner("qrho", [[0.0, 0.0], [1.0, 3.0]])
        qrho_update(st, TransitionSample(0, 0, 1.0, 1))
        assert st.table[0][0] == pytest.approx(2.9, abs=1e-15)

    def test_qrho_one_hot_prior_is_q(self):
        rows = [[0.0, 0.0], [1.0, 3.0]]
        a = learner("qrho", rows)
        a.rho = [[1.0, 0.0], [1.0, 0.0]]
        b = learner("q", rows)
        x = TransitionSample(0, 1, 0.7, 1)
        assert qrho_update(a, x).table == q_update(b, x).table


class TestG:
    def test_hand_example(self):
        st = learner("g", [[0.0, 2.0], [1.0, 3.0]], beta=ConstantBeta(1.0), omega=1.0, visits=1)
        g_update(st, TransitionSample(0, 1, 1.0, 1))
        assert st.table[0][1] == pytest.approx(G_NEW, abs=1e-12)
        # blend with alpha = 1 recovers the raw target
        st = learner("g", [[0.0, 2.0], [1.0, 3.0]], beta=ConstantBeta(1.0))
        g_update(st, TransitionSample(0, 1, 1.0, 1))
        assert st.table[0][1] == pytest.approx(G_TARGET, abs=1e-12)

    def test_beta_evaluated_before_update(self):
        st = learner("g", [[0.0, 0.0], [1.0, 3.0]], beta=LinearBeta(0.5))
        g_update(st, TransitionSample(0, 0, 1.0, 1))
        assert st.last_beta == 0.0
        g_update(st, TransitionSample(0, 0, 1.0, 1))
        assert st.last_beta == 0.5

    def test_beta_zero_bit_identical_to_qrho(self):
        m = random_mdp(np.random.default_rng(1), 5, 3, std=1.0)
        g = make_learner("g", 5, 3, m.gamma, beta=ConstantBeta(0.0))
        q = make_learner("qrho", 5, 3, m.gamma)
        rng = RandomStream(4)
        for _ in range(5000):
            x = next_experience(UniformIID(), m, g, rng)
            g_update(g, x)
            qrho_update(q, x)
        assert g.table == q.table

    def test_huge_beta_matches_q_target(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            rows = rng.normal(0, 5, (3, 4)).tolist()
            g = learner("g", rows, beta=ConstantBeta(1e9))
            q = learner("q", rows)
            x = TransitionSample(0, int(rng.integers(4)), float(rng.normal()), 2)
            g_update(g, x)
            q_update(q, x)
            # alpha = 1 on a fresh count, so the table entry is the target
            assert abs(g.table[0][x.a] - q.table[0][x.a]) < 1e-6

    def test_zero_mean_innovation(self):
        rng_np = np.random.default_rng(17)
        m = random_mdp(rng_np, 5, 3, std=2.0)
        G = rng_np.normal(0, 3, (5, 3))
        rho = uniform_policy(5, 3)
        beta = 0.7
        expected = soft_bellman(m, rho, beta, G)
        st = learner("g", G.tolist(), gamma=m.gamma, beta=ConstantBeta(beta))
        stream = RandomStream(99)
        for s, a in [(0, 0), (2, 1), (4, 2)]:
            n = 100_000
            z = np.empty(n)
            for i in range(n):
                c, s_next = sample_transition(m, stream, s, a)
                z[i] = c + m.gamma * free_energy_row(st.table[s_next], st.rho[s_next], beta) - expected[s, a]
            assert abs(z.mean()) < 3 * z.std(ddof=1) / math.sqrt(n)


class TestPsi:
    def test_zero_table(self):
        st = learner("psi", [[0.0, 0.0], [0.0, 0.0]], omega=1.0, visits=1)
        psi_update(st, TransitionSample(0, 0, 3.0, 1))
        assert st.table[0][0] == pytest.approx(0.5 * 3.0, abs=1e-15)

    def test_gamma_zero_unit_step(self):
        st = learner("psi", [[0.0], [0.0]], gamma=0.0)
        psi_update(st, TransitionSample(0, 0, 2.5, 1))
        assert st.table[0][0] == 2.5

    def test_hand_example(self):
        st = learner("psi", [[1.0, 2.0], [0.0, 4.0]], omega=1.0, visits=9)
        psi_update(st, TransitionSample(0, 0, 1.0, 1))
        assert st.table[0][0] == pytest.approx(PSI_NEW, abs=1e-12)
        assert st.table[0][0] - 1.0 == pytest.approx(PSI_INCREMENT, abs=1e-12)

    def test_terminal_next(self):
        st = learner("psi", [[0.0, 0.0], [5.0, 5.0]])
        psi_update(st, TransitionSample(0, 1, 1.0, 1, terminal=True))
        assert st.table[0][1] == 1.0


class TestDoubleQ:
    def test_cross_estimator(self):
        st = learner("double_q", [[0.0, 0.0], [1.0, 3.0]], gamma=1.0)
        st.secondary[1] = [5.0, 0.0]
        double_q_update(st, TransitionSample(0, 0, 0.0, 1), Coin(0.1))
        assert st.table[0][0] == 5.0
        assert st.secondary[0][0] == 0.0
        assert st.counts[0][0] == 1 and st.secondary_counts[0][0] == 0

    def test_b_branch(self):
        st = learner("double_q", [[0.0, 0.0], [1.0, 3.0]], gamma=1.0)
        st.secondary[1] = [5.0, 0.0]
        double_q_update(st, TransitionSample(0, 0, 0.0, 1), Coin(0.9))
        # B's argmin is action 1, evaluated by A
        assert st.secondary[0][0] == 3.0
        assert st.table[0][0] == 0.0

    def test_equal_tables_match_q(self):
        rows = [[0.0, 0.0], [2.0, -1.0]]
        d = learner("double_q", rows)
        q = learner("q", rows)
        x = TransitionSample(0, 1, 0.3, 1)
        double_q_update(d, x, RandomStream(0))
        q_update(q, x)
        assert q.table[0][1] in (d.table[0][1], d.secondary[0][1])

    def test_gamma_zero(self):
        st = learner("double_q", [[4.0], [1.0]], gamma=0.0)
        double_q_update(st, TransitionSample(0, 0, 2.0, 1), Coin(0.0))
        assert st.table[0][0] == 2.0


class TestConsistentAndSarsa:
    def test_off_diagonal_is_q(self):
        rows = [[0.0, 1.0], [2.0, 0.5]]
        a, b = learner("consistent", rows), learner("q", rows)
        x = TransitionSample(0, 1, 1.0, 1)
        assert consistent_bellman_update(a, x).table == q_update(b, x).table

    def test_self_transition(self):
        st = learner("consistent", [[2.0, 0.0]])
        consistent_bellman_update(st, TransitionSample(0, 0, 1.0, 0))
        assert st.table[0][0] == pytest.approx(2.9, abs=1e-15)

    def test_consistent_gamma_zero(self):
        for s_next in (0, 1):
            st = learner("consistent", [[2.0, 0.0], [1.0, 1.0]], gamma=0.0)
            consistent_bellman_update(st, TransitionSample(0, 0, 1.0, s_next))
            assert st.table[0][0] == 1.0

    def test_sarsa_hand_example(self):
        st = learner("expected_sarsa", [[0.0, 0.0], [1.0, 3.0]])
        row = epsilon_greedy_row(st.table[1], 0.1)
        expected_sarsa_update(st, TransitionSample(0, 0, 1.0, 1), row)
        assert st.table[0][0] == pytest.approx(2.045, abs=1e-12)

    def test_sarsa_limits(self):
        rows = [[0.0, 0.0, 0.0], [1.0, 3.0, 2.0]]
        x = TransitionSample(0, 2, 1.0, 1)
        s = learner("expected_sarsa", rows)
        expected_sarsa_update(s, x, epsilon_greedy_row(rows[1], 1.0))
        r = learner("qrho", rows)
        qrho_update(r, x)
        assert s.table[0][2] == pytest.approx(r.table[0][2], abs=1e-15)
        s = learner("expected_sarsa", rows)
        expected_sarsa_update(s, x, epsilon_greedy_row(rows[1], 0.0))
        q = learner("q", rows)
        q_update(q, x)
        assert s.table[0][2] == q.table[0][2]


class TestInvariants:
    @pytest.mark.parametrize("alg", ["q", "qrho", "g", "psi", "double_q", "consistent", "expected_sarsa"])
    def test_locality(self, alg):
        rng_np = np.random.default_rng(3)
        m = random_mdp(rng_np, 4, 3, std=1.0)
        st = make_learner(alg, 4, 3, m.gamma, beta=LinearBeta(1e-3))
        st.table = rng_np.normal(size=(4, 3)).tolist()
        if st.secondary is not None:
            st.secondary = rng_np.normal(size=(4, 3)).tolist()
        rng = RandomStream(5)
        for step in range(300):
            before = copy.deepcopy((st.table, st.secondary))
            x = next_experience(UniformIID(), m, st, rng)
            update(st, x, rng=rng, exploration_row=epsilon_greedy_row(st.table[x.s_next], 0.1))
            changed = []
            for which, (old, new) in enumerate(zip(before, (st.table, st.secondary))):
                if old is None:
                    continue
                changed += [(which, s, a) for s in range(4) for a in range(3) if old[s][a] != new[s][a]]
            assert len(changed) <= 1
            assert all(s == x.s and a == x.a for _, s, a in changed)
            assert st.t == step + 1
        assert np.all(np.isfinite(st.values()))

    def test_robbins_monro_partial_sums(self):
        n = np.arange(1, 1_000_001, dtype=float)
        for omega in (0.55, 0.8, 1.0):
            a = n ** -omega
            s1 = np.cumsum(a)
            s2 = np.cumsum(a * a)
            # first series keeps growing by decades, the second has flattened
            assert s1[-1] - s1[99_999] > 0.5 * (s1[99_999] - s1[9_999])
            tail_bound = (1e5 ** (1 - 2 * omega)) / (2 * omega - 1)
            assert s2[-1] - s2[99_999] <= tail_bound

    def test_greedy_value(self):
        st = learner("q", [[0.0, 0.0], [2.0, -1.0]])
        st.table[1].append(5.0)
        st.table[0].append(0.0)
        assert greedy_value(st).tolist() == [0.0, -1.0]


def _run_uniform(alg, m, steps, seed, beta=None):
    st = make_learner(alg, m.n_states, m.n_actions, m.gamma, beta=beta)
    rng = RandomStream(seed)
    regime = UniformIID()
    for _ in range(steps):
        update(st, next_experience(regime, m, st, rng))
    return st


class TestConvergence:
    def test_q_reaches_v_star(self):
        m = random_mdp(np.random.default_rng(30), 4, 2, gamma=0.8, std=0.5)
        st = _run_uniform("q", m, 200_000, 1)
        _, V = value_iteration(m, 1e-12)
        assert np.max(np.abs(greedy_value(st) - V)) < 0.05

    def test_qrho(self):
        m = random_mdp(np.random.default_rng(31), 4, 2, gamma=0.8, std=0.5)
        st = _run_uniform("qrho", m, 1_000_000, 2)
        Q_rho, _ = policy_evaluation(m, uniform_policy(4, 2))
        assert np.max(np.abs(st.values() - Q_rho)) < 0.05

    def test_g_fixed_beta(self):
        m = random_mdp(np.random.default_rng(32), 4, 2, gamma=0.8, std=0.5)
        st = _run_uniform("g", m, 1_000_000, 3, beta=ConstantBeta(1.0))
        G_star = soft_value_iteration(m, uniform_policy(4, 2), 1.0, 1e-12)
        assert np.max(np.abs(st.values() - G_star)) < 0.05
