"""Cliff walking under epsilon-greedy exploration.

Q-learning learns the shortest path along the cliff edge and keeps falling
off during exploration; G-learning and Expected-SARSA account for their own
randomness and keep to safer rows.
"""
import numpy as np

from glearning import build_cliff, default_cliff_map
from glearning.environments import cliff_edge_states
from glearning.runner import AlgorithmConfig, DomainConfig, ExperimentConfig, run_experiment

grid = default_cliff_map()
print("\n".join(grid.rows))
edge = cliff_edge_states(grid, build_cliff(grid))

cfg = ExperimentConfig(
    domain=DomainConfig(kind="cliff"),
    algorithms=(
        AlgorithmConfig("q", "q"),
        AlgorithmConfig("g", "g", k=1e-6),
        AlgorithmConfig("sarsa", "expected_sarsa"),
    ),
    iterations=30_000, runs=3, seed=4, eval_interval=10_000,
    exploration="epsilon_greedy", epsilon=0.1,
)
result = run_experiment(cfg)
for label, runs in result.runs.items():
    cost = np.mean([r.cumulative_cost for r in runs])
    near_edge = sum(r.series.visits.states[s] for r in runs for s in edge)
    print(f"{label:>6}: mean cumulative cost {cost:9.0f}, visits next to the cliff {near_edge}")
