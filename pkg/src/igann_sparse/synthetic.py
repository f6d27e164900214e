"""Synthetic datasets with known ground truth for selector evaluation."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def quadratic_selection_data(
    n: int = 1000, n_noise: int = 9, noise_sd: float = 0.5, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """``y = x1^2 + eps`` plus independent standard-normal noise features.

    The informative feature is symmetric around zero, so it carries no linear
    signal; linear selectors should miss it while nonlinear ones catch it.
    Returns ``(X, y)`` with the informative feature in column 0.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 1 + n_noise))
    y = X[:, 0] ** 2 + noise_sd * rng.standard_normal(n)
    return X, y


def linear_selection_data(
    n: int = 1000, n_noise: int = 9, slope: float = 3.0, noise_sd: float = 1.0, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """``y = slope * x1 + eps`` plus independent noise features."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 1 + n_noise))
    y = slope * X[:, 0] + noise_sd * rng.standard_normal(n)
    return X, y


def write_csv(
    path: str | Path,
    X: np.ndarray,
    y: np.ndarray,
    feature_names: list[str] | None = None,
    target_name: str = "target",
) -> None:
    """Write a numeric dataset as a headered CSV."""
    names = feature_names or [f"x{i + 1}" for i in range(X.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [target_name])
        for row, target in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])
