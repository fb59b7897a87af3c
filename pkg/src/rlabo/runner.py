"""Execution-phase runs and the fixed-acquisition comparison harness.

A policy run picks the argmax action each step (no sampling; training-time
stochasticity is deliberately absent at execution). Fixed runs hold one
acquisition throughout. The comparison harness runs every method on paired
seeds: for one (benchmark, seed) cell all methods share the same env seed,
hence the same initial design and the same per-step inner-optimizer streams,
so method differences are attributable to acquisition choice alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionSpec, BETA_LABELS, candidate_set
from .bo_env import BoEnv, EnvConfig
from .neural import PolicyParams, actor_forward, argmax_action
from .parallel import pmap
from .seeding import STREAM_ENV_SEED, child_seed

FIXED_METHODS = tuple(f"fixed-{label}" for label in BETA_LABELS)
ALL_METHODS = FIXED_METHODS + ("policy",)


class ConfigError(ValueError):
    """A run was asked for with inconsistent or missing configuration."""


@dataclass
class RunTrace:
    """Everything observed in one run: initial design plus T selected steps."""

    benchmark: str
    method: str
    seed: int
    init_x: np.ndarray
    init_y: np.ndarray
    steps: list[tuple[int, str, np.ndarray, float]] = field(default_factory=list)

    @property
    def best_so_far(self) -> np.ndarray:
        """Running max including the initial design; index 0 is the init best."""
        ys = [float(np.max(self.init_y))] + [y for (_, _, _, y) in self.steps]
        return np.maximum.accumulate(ys)

    @property
    def final_best(self) -> float:
        return float(self.best_so_far[-1])

    @property
    def selected_betas(self) -> list[str]:
        return [beta for (_, beta, _, _) in self.steps]


def _run(env_cfg: EnvConfig, choose, method: str) -> RunTrace:
    env = BoEnv(env_cfg)
    state = env.reset()
    trace = RunTrace(
        benchmark=env_cfg.benchmark.name,
        method=method,
        seed=env_cfg.seed,
        init_x=env.obs.x.copy(),
        init_y=env.obs.y.copy(),
    )
    for t in range(1, env_cfg.horizon_T + 1):
        spec = choose(state)
        state, _, y, x = env.step(spec)
        trace.steps.append((t, spec.label, x, float(y)))
    return trace


def run_policy(policy: PolicyParams, env_cfg: EnvConfig) -> RunTrace:
    """Greedy execution of a trained selector."""
    if policy.state_dim != 2 + env_cfg.benchmark.dim:
        raise ConfigError(
            f"checkpoint expects state length {policy.state_dim}, "
            f"benchmark needs {2 + env_cfg.benchmark.dim}"
        )
    if policy.n_actions != len(candidate_set()):
        raise ConfigError(f"checkpoint has {policy.n_actions} actions, need 5")

    def choose(state):
        probs = actor_forward(policy, state.as_array())
        return candidate_set()[argmax_action(probs)]

    return _run(env_cfg, choose, "policy")


def run_fixed(spec: AcquisitionSpec, env_cfg: EnvConfig) -> RunTrace:
    """Baseline run holding one acquisition for every step."""
    return _run(env_cfg, lambda _state: spec, f"fixed-{spec.label}")


@dataclass
class MethodStats:
    benchmark: str
    method: str
    mean_final_best: float
    iqr_final_best: float
    mean_steps_to_90pct: float
    rank: int


@dataclass
class ComparisonReport:
    benchmarks: list[str]
    methods: tuple[str, ...]
    n_seeds: int
    horizon_T: int
    traces: list[RunTrace]
    stats: list[MethodStats]
    # (benchmark, method) -> arrays over steps 0..T of best-so-far aggregates
    curves: dict = field(default_factory=dict)

    def stats_for(self, benchmark: str) -> list[MethodStats]:
        return [s for s in self.stats if s.benchmark == benchmark]


def _steps_to_90pct(trace: RunTrace) -> int:
    """First step index at which 90% of the run's total improvement is reached.

    0 when the initial design already meets the target (i.e. no improvement).
    """
    best = trace.best_so_far
    target = best[0] + 0.9 * (best[-1] - best[0])
    return int(np.argmax(best >= target))


def _compare_cell(task, benchmarks_by_name, policies, T, init_design_size, base_seed):
    bench_idx, name, seed_k = task
    env_seed = child_seed(base_seed, STREAM_ENV_SEED, bench_idx, seed_k)
    env_cfg = EnvConfig(
        benchmarks_by_name[name], horizon_T=T, init_design_size=init_design_size, seed=env_seed
    )
    traces = [run_fixed(spec, env_cfg) for spec in candidate_set()]
    traces.append(run_policy(policies[name], env_cfg))
    for tr in traces:
        tr.seed = seed_k  # report the logical seed, not the derived env seed
    return traces


def compare(
    benchmarks: list,
    policies: dict[str, PolicyParams],
    n_seeds: int = 20,
    T: int = 30,
    init_design_size: int = 3,
    base_seed: int = 0,
    jobs: int = 1,
) -> ComparisonReport:
    """Paired-seed comparison of the policy against every fixed acquisition.

    For each benchmark and seed, all six methods run from the identical
    initial design. Missing checkpoints are a configuration error.
    """
    names = [b.name for b in benchmarks]
    missing = [n for n in names if n not in policies]
    if missing:
        raise ConfigError(f"no checkpoint for benchmark(s): {', '.join(missing)}")

    by_name = {b.name: b for b in benchmarks}
    tasks = [(i, name, k) for i, name in enumerate(names) for k in range(n_seeds)]
    worker = partial(
        _compare_cell,
        benchmarks_by_name=by_name,
        policies=policies,
        T=T,
        init_design_size=init_design_size,
        base_seed=base_seed,
    )
    traces = [tr for cell in pmap(worker, tasks, jobs) for tr in cell]

    stats: list[MethodStats] = []
    curves = {}
    for name in names:
        finals = {}
        for method in ALL_METHODS:
            runs = [t for t in traces if t.benchmark == name and t.method == method]
            runs.sort(key=lambda t: t.seed)
            bests = np.array([t.final_best for t in runs])
            curve = np.stack([t.best_so_far for t in runs])
            q25, q75 = np.percentile(bests, [25, 75])
            finals[method] = (
                float(bests.mean()),
                float(q75 - q25),
                float(np.mean([_steps_to_90pct(t) for t in runs])),
            )
            curves[(name, method)] = {
                "mean": curve.mean(axis=0),
                "q25": np.percentile(curve, 25, axis=0),
                "q75": np.percentile(curve, 75, axis=0),
            }
        order = np.argsort([-finals[m][0] for m in ALL_METHODS], kind="stable")
        ranks = {ALL_METHODS[int(j)]: r + 1 for r, j in enumerate(order)}
        for method in ALL_METHODS:
            mean_fb, iqr, steps90 = finals[method]
            stats.append(MethodStats(name, method, mean_fb, iqr, steps90, ranks[method]))

    return ComparisonReport(
        benchmarks=names,
        methods=ALL_METHODS,
        n_seeds=n_seeds,
        horizon_T=T,
        traces=traces,
        stats=stats,
        curves=curves,
    )


def explorative_pattern(report: ComparisonReport) -> dict:
    """Mean ranks of the extreme acquisitions on hard vs. easy benchmarks.

    Hard = eggholder + schwefel, easy = ackley + levy + griewank. Expectation:
    the most explorative method ranks better on hard problems than on easy
    ones, and the most exploitative the other way around. Lower rank = better.
    """
    hard = {"eggholder", "schwefel"}
    easy = {"ackley", "levy", "griewank"}

    def mean_rank(method, group):
        ranks = [s.rank for s in report.stats if s.method == method and s.benchmark in group]
        return float(np.mean(ranks)) if ranks else float("nan")

    out = {
        "explorative_hard": mean_rank("fixed-inf", hard),
        "explorative_easy": mean_rank("fixed-inf", easy),
        "exploitative_hard": mean_rank("fixed-0", hard),
        "exploitative_easy": mean_rank("fixed-0", easy),
    }
    out["explorative_prefers_hard"] = out["explorative_hard"] <= out["explorative_easy"]
    out["exploitative_prefers_easy"] = out["exploitative_easy"] <= out["exploitative_hard"]
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(path, traces: list[RunTrace]) -> None:
    """Long-format per-run rows; initial-design rows get t <= 0 and beta 'init'."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["benchmark", "method", "seed", "t", "beta", "x1", "x2", "y", "best_so_far"])
        for tr in sorted(traces, key=lambda t: (t.benchmark, t.method, t.seed)):
            n0 = len(tr.init_y)
            best = -np.inf
            for j in range(n0):
                best = max(best, float(tr.init_y[j]))
                w.writerow(
                    [tr.benchmark, tr.method, tr.seed, j + 1 - n0, "init"]
                    + [_fmt(v) for v in tr.init_x[j]]
                    + [_fmt(tr.init_y[j]), _fmt(best)]
                )
            for t, beta, x, y in tr.steps:
                best = max(best, y)
                w.writerow(
                    [tr.benchmark, tr.method, tr.seed, t, beta]
                    + [_fmt(v) for v in x]
                    + [_fmt(y), _fmt(best)]
                )


def write_summary_csv(path, report: ComparisonReport) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["benchmark", "method", "mean_final_best", "iqr_final_best",
             "mean_steps_to_90pct", "rank"]
        )
        for s in report.stats:
            w.writerow(
                [s.benchmark, s.method, _fmt(s.mean_final_best), _fmt(s.iqr_final_best),
                 _fmt(s.mean_steps_to_90pct), s.rank]
            )
