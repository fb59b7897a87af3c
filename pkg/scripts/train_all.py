#!/usr/bin/env python3
"""Train one selection policy per benchmark with the default configuration.

Usage: python scripts/train_all.py [--seed N] [--jobs N] [--out DIR]

Writes runs/<benchmark>/{checkpoint.json,learning_curve.csv,manifest.json}
(or under --out). Expect a few minutes per benchmark.
"""

import argparse
import sys

from rlabo.benchmarks import BENCHMARK_NAMES
from rlabo.cli import main as rlabo_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()

    for name in BENCHMARK_NAMES:
        rc = rlabo_main([
            "train",
            "--benchmark", name,
            "--seed", str(args.seed),
            "--jobs", str(args.jobs),
            "--out", f"{args.out}/{name}",
        ])
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
