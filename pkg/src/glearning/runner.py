"""Config-driven experiments: seeded runs, k sweeps and CSV output.

Config files are INI-style key/value text::

    [domain]
    kind = gridworld          ; gridworld | cliff
    map = path/to/map.txt     ; optional, defaults to the shipped map
    cost = gaussian           ; fixed | gaussian | generated
    cost_mean = 1
    cost_std = 2
    mean_low = 1              ; generated only
    mean_high = 3             ; generated only
    gamma = 0.95

    [algorithm.g]             ; section suffix is the series label
    type = g                  ; q | qrho | g | psi | double_q | consistent | expected_sarsa
    schedule = linear         ; linear | constant | inverse_bellman
    k = 1e-4
    sweep_ks = 1e-3, 1e-4     ; optional, runs a k sweep before the main runs
    omega = 0.8

    [run]
    iterations = 250000
    runs = 100
    seed = 0
    eval_interval = 1000
    exploration = uniform     ; uniform | epsilon_greedy
    epsilon = 0.1
    workers = 1
    output = results

Every random stream is derived from ``(seed, run, label, purpose)``; see
:mod:`glearning.rng`.  Results are merged in (algorithm, run) order, so
output does not depend on the worker count.
"""

import configparser
import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from . import learners as L
from .environments import (
    FixedUnit,
    GaussianUnit,
    GeneratedMeans,
    build_cliff,
    build_gridworld,
    default_cliff_map,
    default_gridworld_map,
    load_map,
)
from .exploration import EpsilonGreedy, UniformIID, epsilon_greedy_row, next_experience
from .metrics import MetricPoint, MetricSeries, VisitHistogram
from .oracle import greedy_policy, policy_evaluation, value_iteration
from .rng import MAIN, SWEEP, make_stream

__all__ = [
    "ConfigError",
    "DomainConfig",
    "AlgorithmConfig",
    "ExperimentConfig",
    "RunResult",
    "ExperimentResult",
    "SweepResult",
    "load_config",
    "parse_config",
    "validate_config",
    "build_domain",
    "run_single",
    "run_experiment",
    "k_sweep",
    "aggregate",
    "emit_csv",
    "read_aggregate_csv",
    "AGGREGATE_FIELDS",
]

AGGREGATE_FIELDS = ("iteration", "algorithm", "bias", "mean_abs_error", "policy_suboptimality",
                    "bellman_error_avg", "runs")
PER_RUN_FIELDS = ("run", "iteration", "algorithm", "bias", "mean_abs_error", "policy_suboptimality",
                  "bellman_error_avg", "cumulative_cost")
WORKERS_ENV = "GLEARNING_WORKERS"
VI_TOL = 1e-10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DomainConfig:
    kind: str = "gridworld"
    map_path: Optional[str] = None
    cost: str = "fixed"
    cost_mean: float = 1.0
    cost_std: float = 2.0
    mean_low: float = 1.0
    mean_high: float = 3.0
    gamma: float = 0.95
    mdp: object = field(default=None, compare=False, hash=False)


@dataclass(frozen=True)
class AlgorithmConfig:
    label: str
    type: str
    omega: float = 0.8
    schedule: str = "linear"
    k: Optional[float] = None
    beta: Optional[float] = None
    scale: Optional[float] = None
    smoothing: float = L.BELLMAN_SMOOTHING
    epsilon: Optional[float] = None
    sweep_ks: tuple = ()

    def beta_schedule(self):
        if self.type != "g":
            return None
        if self.schedule == "linear":
            return L.LinearBeta(self.k)
        if self.schedule == "constant":
            return L.ConstantBeta(self.beta)
        return L.InverseBellmanError(self.scale, self.smoothing)


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainConfig = DomainConfig()
    algorithms: tuple = ()
    iterations: int = 250_000
    runs: int = 100
    seed: int = 0
    eval_interval: int = 1000
    exploration: str = "uniform"
    epsilon: float = 0.1
    start_state: Optional[int] = None
    workers: int = 1
    output: str = "results"
    per_run_csv: bool = True
    sweep_iterations: Optional[int] = None
    sweep_runs: int = 5
    sweep_criterion: str = "cost_to_go"
    double_q_mean: bool = False
    psi_bar: bool = False
    record_visits: Optional[bool] = None

    def algorithm(self, label):
        for alg in self.algorithms:
            if alg.label == label:
                return alg
        raise KeyError(label)

    @property
    def visits_enabled(self):
        return self.domain.kind == "cliff" if self.record_visits is None else self.record_visits


# ----------------------------------------------------------------------------- config


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def parse_config(text):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read_string(text)
    try:
        d = cp["domain"] if cp.has_section("domain") else {}
        domain = DomainConfig(
            kind=d.get("kind", "gridworld"),
            map_path=d.get("map") or None,
            cost=d.get("cost", "fixed"),
            cost_mean=float(d.get("cost_mean", 1.0)),
            cost_std=float(d.get("cost_std", 4.0 if d.get("cost") == "generated" else 2.0)),
            mean_low=float(d.get("mean_low", 1.0)),
            mean_high=float(d.get("mean_high", 3.0)),
            gamma=float(d.get("gamma", 0.95)),
        )
        algs = []
        for name in cp.sections():
            if not name.startswith("algorithm."):
                continue
            sec = cp[name]
            label = name.split(".", 1)[1]

            def opt(key, sec=sec):
                return float(sec[key]) if key in sec else None

            algs.append(AlgorithmConfig(
                label=label,
                type=sec.get("type", label),
                omega=float(sec.get("omega", 0.8)),
                schedule=sec.get("schedule", "linear"),
                k=opt("k"),
                beta=opt("beta"),
                scale=opt("scale"),
                smoothing=float(sec.get("smoothing", L.BELLMAN_SMOOTHING)),
                epsilon=opt("epsilon"),
                sweep_ks=_floats(sec.get("sweep_ks", "")),
            ))
        r = cp["run"] if cp.has_section("run") else {}
        sweep_its = r.get("sweep_iterations")
        start = r.get("start_state")
        visits = r.get("record_visits")
        cfg = ExperimentConfig(
            domain=domain,
            algorithms=tuple(algs),
            iterations=int(float(r.get("iterations", 250_000))),
            runs=int(r.get("runs", 100)),
            seed=int(r.get("seed", 0)),
            eval_interval=int(float(r.get("eval_interval", 1000))),
            exploration=r.get("exploration", "uniform"),
            epsilon=float(r.get("epsilon", 0.1)),
            start_state=int(start) if start is not None else None,
            workers=int(r.get("workers", 1)),
            output=r.get("output", "results"),
            per_run_csv=r.get("per_run_csv", "true").lower() in ("1", "true", "yes"),
            sweep_iterations=int(float(sweep_its)) if sweep_its else None,
            sweep_runs=int(r.get("sweep_runs", 5)),
            sweep_criterion=r.get("sweep_criterion", "cost_to_go"),
            double_q_mean=r.get("double_q_mean", "false").lower() in ("1", "true", "yes"),
            psi_bar=r.get("psi_bar", "false").lower() in ("1", "true", "yes"),
            record_visits=None if visits is None else visits.lower() in ("1", "true", "yes"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path):
    path = Path(path)
    cfg = parse_config(path.read_text(encoding="utf-8"))
    if cfg.domain.map_path and not os.path.isabs(cfg.domain.map_path):
        cfg = replace(cfg, domain=replace(cfg.domain, map_path=str(path.parent / cfg.domain.map_path)))
    return cfg


def validate_config(cfg):
    """All problems with ``cfg``; an empty list means it is runnable."""
    errs = []
    d = cfg.domain
    if d.mdp is None:
        if d.kind not in ("gridworld", "cliff"):
            errs.append(f"domain.kind must be gridworld or cliff, got {d.kind!r}")
        if d.kind == "gridworld" and d.cost not in ("fixed", "gaussian", "generated"):
            errs.append(f"domain.cost must be fixed, gaussian or generated, got {d.cost!r}")
        if d.map_path and not os.path.exists(d.map_path):
            errs.append(f"map file {d.map_path} does not exist")
    if not 0 <= d.gamma < 1:
        errs.append("domain.gamma must lie in [0, 1)")
    if d.cost_std < 0:
        errs.append("domain.cost_std must be nonnegative")
    if d.mean_high < d.mean_low:
        errs.append("domain.mean_high must be >= mean_low")
    if cfg.iterations <= 0:
        errs.append("run.iterations must be positive")
    if cfg.runs <= 0:
        errs.append("run.runs must be positive")
    if cfg.eval_interval <= 0:
        errs.append("run.eval_interval must be positive")
    if cfg.exploration not in ("uniform", "epsilon_greedy"):
        errs.append(f"run.exploration must be uniform or epsilon_greedy, got {cfg.exploration!r}")
    if not 0 <= cfg.epsilon <= 1:
        errs.append("run.epsilon must lie in [0, 1]")
    if cfg.sweep_criterion not in ("cost_to_go", "realized"):
        errs.append("run.sweep_criterion must be cost_to_go or realized")
    if cfg.sweep_runs <= 0:
        errs.append("run.sweep_runs must be positive")
    if not cfg.algorithms:
        errs.append("no [algorithm.*] sections")
    labels = [a.label for a in cfg.algorithms]
    if len(set(labels)) != len(labels):
        errs.append("algorithm labels must be unique")
    for a in cfg.algorithms:
        where = f"algorithm.{a.label}"
        if a.type not in L.ALGORITHMS:
            errs.append(f"{where}: unknown type {a.type!r}")
        if not 0.5 < a.omega <= 1:
            errs.append(f"{where}: omega must lie in (0.5, 1]")
        if a.epsilon is not None and not 0 <= a.epsilon <= 1:
            errs.append(f"{where}: epsilon must lie in [0, 1]")
        if a.type != "g":
            continue
        if a.schedule == "linear":
            if a.k is None and not a.sweep_ks:
                errs.append(f"{where}: linear schedule needs k or sweep_ks")
            if a.k is not None and a.k <= 0:
                errs.append(f"{where}: k must be positive")
            if any(k <= 0 for k in a.sweep_ks):
                errs.append(f"{where}: sweep_ks must be positive")
        elif a.schedule == "constant":
            if a.beta is None or a.beta < 0:
                errs.append(f"{where}: constant schedule needs beta >= 0")
        elif a.schedule == "inverse_bellman":
            if (a.scale is None or a.scale <= 0) and not a.sweep_ks:
                errs.append(f"{where}: inverse_bellman schedule needs scale > 0 or sweep_ks")
            if not 0 < a.smoothing < 1:
                errs.append(f"{where}: smoothing must lie in (0, 1)")
        else:
            errs.append(f"{where}: unknown schedule {a.schedule!r}")
    return errs


# ----------------------------------------------------------------------------- runs


@lru_cache(maxsize=8)
def _grid(kind, map_path):
    if map_path:
        return load_map(map_path)
    return default_cliff_map() if kind == "cliff" else default_gridworld_map()


def build_domain(domain, seed, run, purpose=MAIN):
    """Model for one run; only generated-means domains differ between runs."""
    if domain.mdp is not None:
        return domain.mdp
    if domain.kind == "cliff":
        return _cached_domain(domain, 0, 0, MAIN)
    if domain.cost == "generated":
        return _cached_domain(domain, seed, run, purpose)
    return _cached_domain(domain, 0, 0, MAIN)


@lru_cache(maxsize=4)
def _cached_domain(domain, seed, run, purpose):
    grid = _grid(domain.kind, domain.map_path)
    if domain.kind == "cliff":
        m = build_cliff(grid, gamma=domain.gamma)
    else:
        if domain.cost == "fixed":
            variant = FixedUnit()
        elif domain.cost == "gaussian":
            variant = GaussianUnit(std=domain.cost_std, mean=domain.cost_mean)
        else:
            variant = GeneratedMeans(domain.mean_low, domain.mean_high, domain.cost_std)
        m = build_gridworld(grid, variant, make_stream(seed, run, "domain", purpose), gamma=domain.gamma)
    _solution(m)
    return m


def _solution(m):
    """``(Q*, V*)`` memoized on the model instance."""
    sol = getattr(m, "_optimal", None)
    if sol is None:
        sol = value_iteration(m, VI_TOL)
        object.__setattr__(m, "_optimal", sol)
    return sol


def _start_state(cfg, m):
    if cfg.start_state is not None:
        return cfg.start_state
    if cfg.domain.mdp is None and cfg.domain.kind == "cliff":
        grid = _grid(cfg.domain.kind, cfg.domain.map_path)
        return m.labels.index(grid.start)
    return int(m.nonterminal[0])


@dataclass
class RunResult:
    series: MetricSeries
    final_table: np.ndarray
    final_policy_cost: float
    cumulative_cost: float


def _evaluate(cfg, alg, learner, m, v_star, states):
    table = L.greedy_table(learner, double_q_mean=cfg.double_q_mean)
    v = L.greedy_value(learner, double_q_mean=cfg.double_q_mean, use_psi_bar=cfg.psi_bar)
    err = (v - v_star)[states]
    if cfg.exploration == "epsilon_greedy":
        eps = cfg.epsilon
        policy = np.array([epsilon_greedy_row(list(row), eps) for row in table])
    else:
        policy = greedy_policy(table).probs
    _, v_pi = policy_evaluation(m, policy)
    gap = (v_pi - v_star)[states]
    return float(err.mean()), float(np.abs(err).mean()), float(gap.mean()), v_pi


def run_single(cfg, run, alg, purpose=MAIN, iterations=None):
    """One seeded run of one algorithm; metrics every ``eval_interval`` steps."""
    iterations = cfg.iterations if iterations is None else iterations
    m = build_domain(cfg.domain, cfg.seed, run, purpose)
    _, v_star = _solution(m)
    states = m.nonterminal
    rng = make_stream(cfg.seed, run, alg.label, purpose)
    learner = L.make_learner(alg.type, m.n_states, m.n_actions, m.gamma, omega=alg.omega,
                             beta=alg.beta_schedule(), smoothing=alg.smoothing)
    if cfg.exploration == "epsilon_greedy":
        regime = EpsilonGreedy(cfg.epsilon, _start_state(cfg, m))
    else:
        regime = UniformIID()
    sarsa_eps = alg.epsilon if alg.epsilon is not None else cfg.epsilon
    series = MetricSeries(alg.label, run)
    hist = VisitHistogram() if cfg.visits_enabled else None
    step = L.update
    total_cost = 0.0
    for t in range(1, iterations + 1):
        x = next_experience(regime, m, learner, rng)
        if alg.type == "expected_sarsa":
            step(learner, x, rng, epsilon_greedy_row(learner.table[x.s_next], sarsa_eps))
        else:
            step(learner, x, rng)
        total_cost += x.c
        if hist is not None:
            hist.add(x.s, x.s_next)
        if t % cfg.eval_interval == 0:
            bias, mae, gap, v_pi = _evaluate(cfg, alg, learner, m, v_star, states)
            series.append(MetricPoint(t, bias, mae, gap, learner.bellman_signed_avg or 0.0, total_cost))
    series.visits = hist
    if iterations % cfg.eval_interval:
        _, _, _, v_pi = _evaluate(cfg, alg, learner, m, v_star, states)
    return RunResult(series, learner.values(), float(v_pi[states].mean()), total_cost)


def _task(args):
    cfg, run, alg, purpose, iterations = args
    return run_single(cfg, run, alg, purpose, iterations)


def _workers(cfg, workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, cfg.workers)


def _map_tasks(tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks))


@dataclass
class SweepResult:
    chosen: float
    costs: dict


def k_sweep(cfg, candidate_ks, label=None, workers=None, criterion=None):
    """Pick the linear-schedule coefficient whose learned policy is cheapest.

    Each candidate gets ``cfg.sweep_runs`` preliminary runs of
    ``cfg.sweep_iterations`` steps (default: 20% of the main budget).  The
    score is the final greedy policy's exact cost-to-go averaged over states
    and runs, or the realized cumulative cost with ``criterion="realized"``.
    Ties go to the smallest k.
    """
    ks = [float(k) for k in candidate_ks]
    if not ks:
        raise ValueError("need at least one candidate k")
    criterion = criterion or cfg.sweep_criterion
    if label is None:
        label = next(a.label for a in cfg.algorithms if a.type == "g")
    base = cfg.algorithm(label)
    field_name = "scale" if base.schedule == "inverse_bellman" else "k"
    iterations = cfg.sweep_iterations or max(1, cfg.iterations // 5)
    tasks = []
    for k in ks:
        alg = replace(base, **{field_name: k}, sweep_ks=())
        tasks += [(cfg, run, alg, SWEEP, iterations) for run in range(cfg.sweep_runs)]
    results = _map_tasks(tasks, _workers(cfg, workers))
    costs = {}
    for i, k in enumerate(ks):
        chunk = results[i * cfg.sweep_runs:(i + 1) * cfg.sweep_runs]
        if criterion == "realized":
            costs[k] = float(np.mean([r.cumulative_cost for r in chunk]))
        else:
            costs[k] = float(np.mean([r.final_policy_cost for r in chunk]))
    best = min(costs.values())
    chosen = min(k for k in ks if costs[k] == best)
    return SweepResult(chosen, costs)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: dict
    aggregate: dict
    sweeps: dict = field(default_factory=dict)

    def series(self, label):
        return [r.series for r in self.runs[label]]


def aggregate(series_list):
    """Average run series at matching iterations."""
    by_iter = {}
    for s in series_list:
        for p in s.points:
            by_iter.setdefault(p.iteration, []).append(p)
    out = []
    for it in sorted(by_iter):
        pts = by_iter[it]
        out.append({
            "iteration": it,
            "bias": math.fsum(p.bias for p in pts) / len(pts),
            "mean_abs_error": math.fsum(p.mean_abs_error for p in pts) / len(pts),
            "policy_suboptimality": math.fsum(p.policy_suboptimality for p in pts) / len(pts),
            "bellman_error_avg": math.fsum(p.bellman_error_avg for p in pts) / len(pts),
            "runs": len(pts),
        })
    return out


def run_experiment(cfg, workers=None, seed=None):
    """Run every configured algorithm for ``cfg.runs`` seeded runs."""
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    n_workers = _workers(cfg, workers)
    sweeps = {}
    algs = []
    for alg in cfg.algorithms:
        if alg.type == "g" and alg.sweep_ks:
            res = k_sweep(cfg, alg.sweep_ks, alg.label, n_workers)
            sweeps[alg.label] = res
            field_name = "scale" if alg.schedule == "inverse_bellman" else "k"
            alg = replace(alg, **{field_name: res.chosen})
        algs.append(alg)
    cfg = replace(cfg, algorithms=tuple(algs))
    tasks = [(cfg, run, alg, MAIN, None) for alg in algs for run in range(cfg.runs)]
    results = _map_tasks(tasks, n_workers)
    runs = {}
    for (_, _, alg, _, _), res in zip(tasks, results):
        runs.setdefault(alg.label, []).append(res)
    agg = {label: aggregate([r.series for r in rs]) for label, rs in runs.items()}
    return ExperimentResult(cfg, runs, agg, sweeps)


# ----------------------------------------------------------------------------- output


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _write_rows(path, header, rows):
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)
    return path


def emit_csv(result, out_dir=None, name="experiment"):
    """Write aggregate, per-run and (when recorded) visit-histogram CSV files.

    Files are written as ``*.partial`` and renamed on success, so a failed
    write leaves the partial file flagged by its suffix.
    """
    out = Path(out_dir if out_dir is not None else result.config.output)
    out.mkdir(parents=True, exist_ok=True)
    if not result.runs:
        raise ValueError("no series to write")
    written = []
    rows = []
    for label, agg in result.aggregate.items():
        for p in agg:
            rows.append([p["iteration"], label, p["bias"], p["mean_abs_error"], p["policy_suboptimality"],
                         p["bellman_error_avg"], p["runs"]])
    written.append(_write_rows(out / f"{name}_aggregate.csv", AGGREGATE_FIELDS, rows))
    if result.config.per_run_csv:
        rows = []
        for label, rs in result.runs.items():
            for r in rs:
                for p in r.series.points:
                    rows.append([r.series.run, p.iteration, label, p.bias, p.mean_abs_error,
                                 p.policy_suboptimality, p.bellman_error_avg, p.cumulative_cost])
        written.append(_write_rows(out / f"{name}_runs.csv", PER_RUN_FIELDS, rows))
    for label, rs in result.runs.items():
        hists = [r.series.visits for r in rs if r.series.visits is not None]
        if not hists:
            continue
        total = VisitHistogram()
        for h in hists:
            total.merge(h)
        written.append(_write_rows(out / f"{name}_{label}_visits.csv", ("state", "visits"),
                                   sorted(total.states.items())))
        written.append(_write_rows(out / f"{name}_{label}_transitions.csv", ("from_state", "to_state", "count"),
                                   [(a, b, n) for (a, b), n in sorted(total.transitions.items())]))
    if result.sweeps:
        rows = [(label, k, cost, int(k == res.chosen)) for label, res in result.sweeps.items()
                for k, cost in res.costs.items()]
        written.append(_write_rows(out / f"{name}_sweep.csv", ("algorithm", "k", "cost", "chosen"), rows))
    return written


def read_aggregate_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["iteration"] = int(r["iteration"])
        r["runs"] = int(r["runs"])
        for key in ("bias", "mean_abs_error", "policy_suboptimality", "bellman_error_avg"):
            r[key] = float(r[key])
    return rows
