"""Command-line entry point.

Subcommands:

    train     learn a selection policy on one benchmark
    run       execute one BO run with a checkpoint or a fixed acquisition
    compare   paired-seed comparison of a policy against all fixed baselines
    bench     print benchmark values at given points (debugging aid)

Every command writes a manifest before any long computation starts; re-running
with ``--config <manifest.json>`` (and the same seed/out settings) reproduces
the outputs bitwise. Exit codes: 0 success, 1 numerical failure, 2 usage or
configuration error. ``RLABO_OUT`` sets the default output root.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import spec_for_beta
from .benchmarks import BENCHMARK_NAMES, evaluate, get_benchmark
from .bo_env import EnvConfig
from .gp import GpNumericalError
from .neural import load_checkpoint
from .ppo import TrainConfig, train
from .runner import (
    ConfigError,
    compare,
    explorative_pattern,
    run_fixed,
    run_policy,
    write_summary_csv,
    write_trace_csv,
)

TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


def _out_root() -> Path:
    return Path(os.environ.get("RLABO_OUT", "runs"))


def _load_config_file(path: str) -> dict:
    obj = json.loads(Path(path).read_text())
    if "config" in obj and isinstance(obj["config"], dict):
        obj = obj["config"]  # accept a previously written manifest
    return obj


def write_manifest(out_dir: Path, command: str, config: dict, seed: int, outputs: dict) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "seed": seed,
        "config": config,
        "outputs": {k: str(v) for k, v in outputs.items()},
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def cmd_train(args) -> int:
    if args.benchmark not in BENCHMARK_NAMES:
        print(
            f"unknown benchmark {args.benchmark!r}; valid: {', '.join(BENCHMARK_NAMES)}",
            file=sys.stderr,
        )
        return 2
    raw = _load_config_file(args.config) if args.config else {}
    unknown = set(raw) - TRAIN_FIELDS - {"benchmark"}
    if unknown:
        print(f"unknown config keys: {', '.join(sorted(unknown))}", file=sys.stderr)
        return 2
    raw.pop("benchmark", None)
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        cfg = TrainConfig(**raw)
    except (TypeError, ValueError) as e:
        print(f"bad training config: {e}", file=sys.stderr)
        return 2

    out = Path(args.out) if args.out else _out_root() / f"train-{args.benchmark}-seed{cfg.seed}"
    env_cfg = EnvConfig(
        get_benchmark(args.benchmark),
        horizon_T=cfg.T,
        init_design_size=cfg.init_design_size,
        seed=cfg.seed,
    )
    config = {"benchmark": args.benchmark, **dataclasses.asdict(cfg)}
    write_manifest(
        out,
        "train",
        config,
        cfg.seed,
        {"checkpoint": out / "checkpoint.json", "learning_curve": out / "learning_curve.csv"},
    )
    try:
        result = train(env_cfg, cfg, out_dir=out, jobs=args.jobs, trace_path=args.trace)
    except GpNumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1
    tail = result.five_episode_avg[-1]
    print(f"trained {args.benchmark}: {len(result.episode_rewards)} episodes, "
          f"last 5-episode avg reward {tail:.4g}")
    print(f"outputs in {out}")
    return 0


def _resolved(args, name, default):
    """Flag value, else config-file value, else the default."""
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    cfg = getattr(args, "_config", None) or {}
    return cfg.get(name, default)


def cmd_run(args) -> int:
    args._config = _load_config_file(args.config) if args.config else {}
    checkpoint = _resolved(args, "checkpoint", None)
    fixed_beta = _resolved(args, "fixed_beta", None)
    benchmark = _resolved(args, "benchmark", None)
    steps = _resolved(args, "steps", 30)
    init_design = _resolved(args, "init_design_size", 3)
    if (checkpoint is None) == (fixed_beta is None):
        print("exactly one of --checkpoint or --fixed-beta is required", file=sys.stderr)
        return 2
    if benchmark not in BENCHMARK_NAMES:
        print(
            f"unknown benchmark {benchmark!r}; valid: {', '.join(BENCHMARK_NAMES)}",
            file=sys.stderr,
        )
        return 2
    env_cfg = EnvConfig(
        get_benchmark(benchmark),
        horizon_T=steps,
        init_design_size=init_design,
        seed=_resolved(args, "seed", 0),
    )
    try:
        if checkpoint:
            policy, _meta = load_checkpoint(checkpoint)
            trace = run_policy(policy, env_cfg)
        else:
            trace = run_fixed(spec_for_beta(fixed_beta), env_cfg)
    except FileNotFoundError as e:
        print(f"missing checkpoint: {e}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as e:
        print(str(e), file=sys.stderr)
        return 2
    except GpNumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1

    out = Path(args.out) if args.out else _out_root() / f"run-{benchmark}-seed{env_cfg.seed}"
    write_manifest(
        out,
        "run",
        {
            "benchmark": benchmark,
            "steps": steps,
            "init_design_size": init_design,
            "checkpoint": checkpoint,
            "fixed_beta": fixed_beta,
            "seed": env_cfg.seed,
        },
        env_cfg.seed,
        {"trace": out / "trace.csv"},
    )
    write_trace_csv(out / "trace.csv", [trace])
    print(f"final y* = {trace.final_best!r}")
    print(f"trace in {out / 'trace.csv'}")
    return 0


def cmd_compare(args) -> int:
    args._config = _load_config_file(args.config) if args.config else {}
    raw_names = _resolved(args, "benchmarks", "all")
    if isinstance(raw_names, str):
        names = list(BENCHMARK_NAMES) if raw_names == "all" else raw_names.split(",")
    else:
        names = list(raw_names)
    bad = [n for n in names if n not in BENCHMARK_NAMES]
    if bad:
        print(f"unknown benchmark(s): {', '.join(bad)}", file=sys.stderr)
        return 2
    ckpt_path = _resolved(args, "checkpoints", None)
    if ckpt_path is None:
        print("--checkpoints (or a config providing it) is required", file=sys.stderr)
        return 2
    n_seeds = _resolved(args, "seeds", 20)
    steps = _resolved(args, "steps", 30)
    init_design = _resolved(args, "init_design_size", 3)

    ckpt_dir = Path(ckpt_path)
    policies = {}
    for name in names:
        for cand in (ckpt_dir / f"{name}.json", ckpt_dir / name / "checkpoint.json"):
            if cand.exists():
                policies[name], _ = load_checkpoint(cand)
                break
        else:
            print(f"no checkpoint for benchmark: {name} (looked in {ckpt_dir})", file=sys.stderr)
            return 2

    seed = _resolved(args, "seed", 0)
    out = Path(args.out) if args.out else _out_root() / f"compare-seed{seed}"
    config = {
        "benchmarks": names,
        "seeds": n_seeds,
        "steps": steps,
        "init_design_size": init_design,
        "checkpoints": str(ckpt_dir),
        "seed": seed,
    }
    outputs = {name: out / f"{name}.csv" for name in names}
    outputs["summary"] = out / "summary.csv"
    write_manifest(out, "compare", config, seed, outputs)

    try:
        report = compare(
            [get_benchmark(n) for n in names],
            policies,
            n_seeds=n_seeds,
            T=steps,
            init_design_size=init_design,
            base_seed=seed,
            jobs=args.jobs,
        )
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2
    except GpNumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 1

    for name in names:
        write_trace_csv(out / f"{name}.csv", [t for t in report.traces if t.benchmark == name])
    write_summary_csv(out / "summary.csv", report)

    for s in report.stats:
        if s.method == "policy":
            print(f"{s.benchmark}: policy mean final best {s.mean_final_best:.6g} "
                  f"(rank {s.rank} of {len(report.methods)})")
    if set(names) == set(BENCHMARK_NAMES):
        pat = explorative_pattern(report)
        if not (pat["explorative_prefers_hard"] and pat["exploitative_prefers_easy"]):
            print(f"warning: exploration/exploitation ranking pattern not met: {pat}",
                  file=sys.stderr)
    print(f"outputs in {out}")
    return 0


def cmd_bench(args) -> int:
    if args.benchmark not in BENCHMARK_NAMES:
        print(
            f"unknown benchmark {args.benchmark!r}; valid: {', '.join(BENCHMARK_NAMES)}",
            file=sys.stderr,
        )
        return 2
    b = get_benchmark(args.benchmark)
    try:
        for raw in args.point:
            x = np.array([float(v) for v in raw.split(",")])
            print(f"{args.benchmark}({raw}) = {evaluate(b, x)!r}")
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlabo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a selection policy on one benchmark")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="flat JSON config (or a manifest) of training fields")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trace", help="optional JSONL episode-trace path")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("run", help="execute one BO run")
    p.add_argument("--benchmark")
    p.add_argument("--checkpoint")
    p.add_argument("--fixed-beta", dest="fixed_beta")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--init-design", dest="init_design_size", type=int)
    p.add_argument("--config", help="flat JSON config (or a manifest) supplying defaults")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="compare policy vs fixed acquisitions")
    p.add_argument("--benchmarks")
    p.add_argument("--checkpoints", help="dir with <benchmark>.json checkpoints")
    p.add_argument("--seeds", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--init-design", dest="init_design_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="flat JSON config (or a manifest) supplying defaults")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("bench", help="print benchmark values at points")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--point", action="append", required=True, help="comma-separated coordinates")
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
