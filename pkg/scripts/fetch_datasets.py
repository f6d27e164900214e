#!/usr/bin/env python3
"""Materialize the benchmark datasets under data/ and write the registry.

Two datasets ship inside the scikit-learn wheel and need no network
(breast_cancer, diabetes). The other two (wine quality white, California
housing) are downloaded from their public sources, so this script needs a
network connection for them; on failure it keeps going and registers
whatever it could materialize.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import urllib.request
from pathlib import Path

import numpy as np

WINE_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/"
    "wine-quality/winequality-white.csv"
)


def write_csv(path: Path, header: list[str], X: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row, target in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])


def fetch_breast_cancer(out: Path) -> dict:
    from sklearn.datasets import load_breast_cancer

    d = load_breast_cancer()
    names = [n.replace(" ", "_") for n in d.feature_names]
    write_csv(out / "breast_cancer.csv", names + ["malignant"], d.data, 1.0 - d.target)
    return {"name": "breast_cancer", "path": "breast_cancer.csv", "target": "malignant",
            "task": "classification"}


def fetch_diabetes(out: Path) -> dict:
    from sklearn.datasets import load_diabetes

    d = load_diabetes()
    write_csv(out / "diabetes.csv", list(d.feature_names) + ["progression"], d.data, d.target)
    return {"name": "diabetes", "path": "diabetes.csv", "target": "progression",
            "task": "regression"}


def fetch_wine(out: Path) -> dict:
    with urllib.request.urlopen(WINE_URL, timeout=60) as resp:
        text = resp.read().decode("utf-8")
    reader = csv.reader(io.StringIO(text), delimiter=";")
    header = [h.strip().strip('"').replace(" ", "_") for h in next(reader)]
    rows = list(reader)
    with open(out / "wine.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return {"name": "wine", "path": "wine.csv", "target": "quality", "task": "regression"}


def fetch_house(out: Path) -> dict:
    from sklearn.datasets import fetch_california_housing

    d = fetch_california_housing()
    write_csv(out / "house.csv", list(d.feature_names) + ["MedHouseVal"], d.data, d.target)
    return {"name": "house", "path": "house.csv", "target": "MedHouseVal",
            "task": "regression"}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory (default: data/)")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    entries = []
    for fetch in (fetch_breast_cancer, fetch_diabetes, fetch_wine, fetch_house):
        name = fetch.__name__.removeprefix("fetch_")
        try:
            entries.append(fetch(out))
            print(f"  ok   {name}")
        except Exception as exc:  # noqa: BLE001 - report and continue
            print(f"  FAIL {name}: {exc}", file=sys.stderr)
    (out / "registry.json").write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
    print(f"registry with {len(entries)} datasets -> {out / 'registry.json'}")
    return 0 if entries else 1


if __name__ == "__main__":
    sys.exit(main())
