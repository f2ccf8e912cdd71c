"""Why noisy costs make Q-learning optimistic, and what G-learning does about it.

The min over noisy estimates is biased low (Jensen).  Q-learning bootstraps
from exactly that min, so its values start out too low.  G-learning starts
from the prior average and only gradually hardens it into a min.
"""
import numpy as np

from glearning import jensen_bias_demo
from glearning.runner import AlgorithmConfig, DomainConfig, ExperimentConfig, run_experiment

# the min of two standard normals averages to -1/sqrt(pi)
res = jensen_bias_demo([0.0, 0.0], 1.0, 200_000, np.random.default_rng(0))
print(f"E[min] = {res.mean_min:.4f}, true min = {res.true_min}, -1/sqrt(pi) = {-1 / np.sqrt(np.pi):.4f}")

# a short noisy-gridworld run; a full comparison uses more runs and steps
cfg = ExperimentConfig(
    domain=DomainConfig(kind="gridworld", cost="gaussian", cost_std=2.0),
    algorithms=(AlgorithmConfig("q", "q"), AlgorithmConfig("g", "g", k=1e-4)),
    iterations=20_000, runs=3, seed=1, eval_interval=5000,
)
result = run_experiment(cfg)
print("\niteration   bias(Q)   bias(G)   mae(Q)   mae(G)")
for pq, pg in zip(result.aggregate["q"], result.aggregate["g"]):
    print(f"{pq['iteration']:>9} {pq['bias']:>9.3f} {pg['bias']:>9.3f} "
          f"{pq['mean_abs_error']:>8.3f} {pg['mean_abs_error']:>8.3f}")
