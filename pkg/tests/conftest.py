import csv

import numpy as np
import pytest


def write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@pytest.fixture
def college_like_csv(tmp_path):
    """1000 rows, 4 numeric features, 3 categoricals expanding to 10 dummies,
    binary target; mirrors the college dataset's counting convention."""
    rng = np.random.default_rng(42)
    n = 1000
    numeric = rng.standard_normal((n, 4))
    cat_a = rng.choice(["alpha", "beta", "gamma"], size=n)
    cat_b = rng.choice(["yes", "no", "maybe"], size=n)
    cat_c = rng.choice(["n", "e", "s", "w"], size=n)
    target = rng.choice(["accept", "reject"], size=n)
    path = tmp_path / "college_like.csv"
    header = ["gpa", "score", "rank", "essays", "region_a", "region_b", "region_c", "decision"]
    rows = [
        [repr(float(numeric[i, 0])), repr(float(numeric[i, 1])), repr(float(numeric[i, 2])), repr(float(numeric[i, 3])),
         cat_a[i], cat_b[i], cat_c[i], target[i]]
        for i in range(n)
    ]
    write_rows(path, header, rows)
    return path
