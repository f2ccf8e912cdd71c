"""Soft value iteration on the shipped gridworld, swept over beta.

At beta = 0 the solution is the value of the uniform prior; as beta grows it
slides monotonically down to the optimal values.
"""
import numpy as np

from glearning import (
    build_gridworld,
    default_gridworld_map,
    policy_evaluation,
    soft_value_iteration,
    uniform_policy,
    value_iteration,
)

grid = default_gridworld_map()
print("\n".join(grid.rows))
m = build_gridworld(grid)
rho = uniform_policy(m.n_states, m.n_actions)

Q_star, V_star = value_iteration(m, 1e-10)
Q_rho, _ = policy_evaluation(m, rho)
print(f"\n{m.n_states} states, {m.n_actions} actions")
print(f"|Q_rho - Q*| = {np.max(np.abs(Q_rho - Q_star)):.3f}")

for beta in (0.0, 0.1, 1.0, 10.0, 100.0):
    G = soft_value_iteration(m, rho, beta, 1e-10)
    print(f"beta={beta:<6g} sup|G - Q*| = {np.max(np.abs(G - Q_star)):.4f}")
