"""Run an experiment from the sample INI file and write its CSV files.

The same file works with the command line:
    python -m glearning run --config demos/small_gridworld.ini --out results
"""
from pathlib import Path

from glearning.runner import emit_csv, load_config, read_aggregate_csv, run_experiment, validate_config

here = Path(__file__).parent
cfg = load_config(here / "small_gridworld.ini")
print("problems:", validate_config(cfg) or "none")

result = run_experiment(cfg)
print("sweep:", {label: res.costs for label, res in result.sweeps.items()})
paths = emit_csv(result, here / "results")
for p in paths:
    print("wrote", p)

for row in read_aggregate_csv(paths[0])[-3:]:
    print(row)
