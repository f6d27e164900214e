#!/usr/bin/env python3
"""Run the full evaluation protocol: 20 repeats x 5-fold CV per dataset,
comparing the full model, the sparse model and the lasso selector.

Expects data/registry.json (see scripts/fetch_datasets.py). Results land in
results/ as report.json and report.txt.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from igann_sparse.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--registry", default="data/registry.json")
    parser.add_argument("--out", default="results")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--models", default="igann_full,igann_sparse,lasso")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if not Path(args.registry).exists():
        print(f"registry {args.registry} not found; run scripts/fetch_datasets.py first",
              file=sys.stderr)
        return 1
    return cli_main([
        "benchmark",
        "--registry", args.registry,
        "--models", args.models,
        "--repeats", str(args.repeats),
        "--folds", str(args.folds),
        "--seed", str(args.seed),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
