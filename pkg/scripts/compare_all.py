#!/usr/bin/env python3
"""Compare trained policies against every fixed acquisition on all benchmarks.

Usage: python scripts/compare_all.py --checkpoints runs [--seeds N] [--jobs N]

Expects runs/<benchmark>/checkpoint.json for each benchmark (the layout
written by scripts/train_all.py); writes per-benchmark trace CSVs and a
summary CSV under --out.
"""

import argparse
import sys

from rlabo.cli import main as rlabo_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoints", default="runs")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--steps", type=int, default=30)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/comparison")
    args = ap.parse_args()

    return rlabo_main([
        "compare",
        "--benchmarks", "all",
        "--checkpoints", args.checkpoints,
        "--seeds", str(args.seeds),
        "--steps", str(args.steps),
        "--jobs", str(args.jobs),
        "--seed", str(args.seed),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
