"""Tabular data ingestion, preprocessing and cross-validation splitting.

The preprocessing pipeline turns a raw CSV into a standardized design matrix:
id-like columns are dropped, high-cardinality categoricals (more than 25
distinct values) are dropped, remaining categoricals are one-hot encoded with
one dummy per level (no reference level is removed), numeric columns are
median-imputed and standardized, and regression targets are standardized.
Every original feature maps to a contiguous range of design-matrix columns,
recorded in ``PreparedDataset.groups``.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .artifacts import load_artifact, save_artifact

NUMERIC = "numeric"
CATEGORICAL = "categorical"
TARGET = "target"
ID = "id"

CLASSIFICATION = "classification"
REGRESSION = "regression"

MISSING_LEVEL = "(missing)"

# Distinct-value cap for categorical columns: more than this many levels
# and the column is dropped outright.
MAX_CATEGORICAL_LEVELS = 25


class DataError(ValueError):
    """Malformed input data or an impossible preprocessing request."""


def _parse_float(cell: str) -> float:
    return float(cell.strip())


def _is_number(cell: str) -> bool:
    try:
        _parse_float(cell)
    except ValueError:
        return False
    return True


@dataclass
class RawDataset:
    """A parsed CSV held column-major as strings, with per-column types.

    ``types`` maps every column to one of ``numeric``, ``categorical``,
    ``target`` or ``id``; exactly one column is the target. Empty cells are
    missing values.
    """

    columns: dict[str, list[str]]
    types: dict[str, str]
    target: str

    def __post_init__(self) -> None:
        if self.target not in self.columns:
            raise DataError(f"target column {self.target!r} not present")
        targets = [c for c, t in self.types.items() if t == TARGET]
        if targets != [self.target]:
            raise DataError("exactly one column must be typed as target")
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise DataError("columns have unequal lengths")
        if self.n < 1:
            raise DataError("zero data rows")

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    def feature_columns(self) -> list[str]:
        return [c for c, t in self.types.items() if t in (NUMERIC, CATEGORICAL)]


def load_csv(
    path: str | Path,
    target: str,
    type_overrides: dict[str, str] | None = None,
    id_columns: tuple[str, ...] = (),
) -> RawDataset:
    """Parse a headered, comma-delimited UTF-8 CSV into a :class:`RawDataset`.

    Column types are inferred (all non-empty cells parse as numbers ->
    numeric, otherwise categorical) unless overridden via ``type_overrides``.
    Raises :class:`DataError` on ragged rows, a missing target column, or a
    file with no data rows.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        cells: list[list[str]] = [[] for _ in header]
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            for col, cell in zip(cells, row):
                col.append(cell.strip())
    if not cells or not cells[0]:
        raise DataError(f"{path}: zero data rows")
    if target not in header:
        raise DataError(f"{path}: no target column named {target!r}")

    overrides = dict(type_overrides or {})
    types: dict[str, str] = {}
    for name, col in zip(header, cells):
        if name == target:
            types[name] = TARGET
        elif name in id_columns:
            types[name] = ID
        elif name in overrides:
            if overrides[name] not in (NUMERIC, CATEGORICAL, ID):
                raise DataError(f"invalid type override for {name!r}: {overrides[name]!r}")
            types[name] = overrides[name]
        else:
            non_missing = [c for c in col if c != ""]
            numeric = bool(non_missing) and all(_is_number(c) for c in non_missing)
            types[name] = NUMERIC if numeric else CATEGORICAL
    return RawDataset(columns=dict(zip(header, cells)), types=types, target=target)


@dataclass(frozen=True)
class PreprocessConfig:
    """Options controlling :func:`preprocess`.

    ``task`` of ``None`` means infer: a target with exactly two distinct
    values is treated as classification, anything else as regression.
    Id-like columns are removed only when named explicitly or matched by a
    regex in ``id_patterns`` (full match, case-insensitive).
    """

    task: str | None = None
    id_columns: tuple[str, ...] = ()
    id_patterns: tuple[str, ...] = ()
    max_levels: int = MAX_CATEGORICAL_LEVELS


@dataclass
class PreparedDataset:
    """Standardized design matrix plus the metadata needed to interpret it.

    ``groups`` maps each kept original feature to its half-open column range
    ``[start, stop)`` in ``X``; ranges are disjoint, contiguous and cover
    every column. For regression ``y`` is standardized and ``target_params``
    holds ``(mean, std)`` for the inverse transform; for classification ``y``
    is in ``{0, 1}`` and ``class_labels`` records the raw label mapped to
    each code.
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    feature_names: tuple[str, ...]
    column_names: tuple[str, ...]
    groups: dict[str, tuple[int, int]]
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    target_params: tuple[float, float] | None = None
    class_labels: tuple[str, str] | None = None
    dropped: dict[str, str] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def inverse_transform_target(self, y_std: np.ndarray) -> np.ndarray:
        """Map standardized regression predictions back to raw target units."""
        if self.task != REGRESSION or self.target_params is None:
            raise DataError("inverse target transform only applies to regression data")
        mean, std = self.target_params
        return np.asarray(y_std, dtype=float) * std + mean


def _standardize(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(values.mean())
    std = float(values.std())
    if std <= 1e-15:
        # constant column: keep it as all zeros so downstream fits ignore it
        return np.zeros_like(values), mean, 0.0
    return (values - mean) / std, mean, std


def _numeric_column(col: list[str]) -> np.ndarray:
    out = np.empty(len(col))
    for i, cell in enumerate(col):
        out[i] = np.nan if cell == "" else _parse_float(cell)
    missing = np.isnan(out)
    if missing.any():
        present = out[~missing]
        out[missing] = float(np.median(present)) if present.size else 0.0
    return out


def preprocess(raw: RawDataset, config: PreprocessConfig | None = None) -> PreparedDataset:
    """Apply the full preprocessing pipeline to a :class:`RawDataset`."""
    config = config or PreprocessConfig()
    id_regexes = [re.compile(p, re.IGNORECASE) for p in config.id_patterns]

    target_col = raw.columns[raw.target]
    keep_rows = np.array([c != "" for c in target_col], dtype=bool)
    n_dropped_rows = int((~keep_rows).sum())
    if not keep_rows.any():
        raise DataError("target column has no observed values")

    dropped: dict[str, str] = {}
    kept: list[str] = []
    for name in raw.feature_columns():
        if raw.types[name] == ID:
            dropped[name] = "id column"
            continue
        if name in config.id_columns or any(rx.fullmatch(name) for rx in id_regexes):
            dropped[name] = "id column"
            continue
        if raw.types[name] == CATEGORICAL:
            levels = {c for c in raw.columns[name] if c != ""}
            if len(levels) > config.max_levels:
                dropped[name] = f"categorical with {len(levels)} distinct values"
                continue
        kept.append(name)
    for name, typ in raw.types.items():
        if typ == ID and name not in dropped:
            dropped[name] = "id column"
    if not kept:
        raise DataError("all feature columns were dropped")

    blocks: list[np.ndarray] = []
    column_names: list[str] = []
    groups: dict[str, tuple[int, int]] = {}
    means: list[float] = []
    stds: list[float] = []
    start = 0
    for name in kept:
        col = [c for c, keep in zip(raw.columns[name], keep_rows) if keep]
        if raw.types[name] == NUMERIC:
            values, mean, std = _standardize(_numeric_column(col))
            blocks.append(values[:, None])
            column_names.append(name)
            means.append(mean)
            stds.append(std)
            width = 1
        else:
            levels = sorted({c for c in col if c != ""})
            if any(c == "" for c in col):
                levels.append(MISSING_LEVEL)
            width = len(levels)
            index = {lvl: j for j, lvl in enumerate(levels)}
            dummies = np.zeros((len(col), width))
            for i, cell in enumerate(col):
                dummies[i, index[cell if cell != "" else MISSING_LEVEL]] = 1.0
            blocks.append(dummies)
            column_names.extend(f"{name}={lvl}" for lvl in levels)
            means.extend([0.0] * width)
            stds.extend([1.0] * width)
        groups[name] = (start, start + width)
        start += width

    X = np.hstack(blocks)
    y_cells = [c for c, keep in zip(target_col, keep_rows) if keep]
    distinct = sorted(set(y_cells))
    if len(distinct) < 2:
        raise DataError("target has fewer than 2 distinct values")

    task = config.task
    if task is None:
        task = CLASSIFICATION if len(distinct) == 2 else REGRESSION
    if task not in (CLASSIFICATION, REGRESSION):
        raise DataError(f"unknown task {task!r}")

    if task == CLASSIFICATION:
        if len(distinct) != 2:
            raise DataError(f"classification target must be binary, found {len(distinct)} values")
        code = {distinct[0]: 0.0, distinct[1]: 1.0}
        y = np.array([code[c] for c in y_cells])
        target_params = None
        class_labels = (distinct[0], distinct[1])
    else:
        if not all(_is_number(c) for c in y_cells):
            raise DataError("regression target contains non-numeric values")
        y_raw = np.array([_parse_float(c) for c in y_cells])
        y, t_mean, t_std = _standardize(y_raw)
        if t_std == 0.0:
            raise DataError("regression target is constant")
        target_params = (t_mean, t_std)
        class_labels = None

    if n_dropped_rows:
        dropped["__rows_missing_target__"] = f"{n_dropped_rows} rows dropped"
    return PreparedDataset(
        X=X,
        y=y,
        task=task,
        feature_names=tuple(kept),
        column_names=tuple(column_names),
        groups=groups,
        scaler_mean=np.array(means),
        scaler_std=np.array(stds),
        target_params=target_params,
        class_labels=class_labels,
        dropped=dropped,
    )


def prepare_arrays(
    X: np.ndarray,
    y: np.ndarray,
    task: str,
    feature_names: tuple[str, ...] | None = None,
) -> PreparedDataset:
    """Build a :class:`PreparedDataset` directly from numeric arrays.

    Convenience path for synthetic data and datasets that are already fully
    numeric: every column is standardized and becomes its own single-column
    feature group.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DataError("X must be 2-d and y 1-d with matching row counts")
    names = tuple(feature_names) if feature_names else tuple(f"x{i + 1}" for i in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise DataError("feature_names length must match the number of columns")

    cols, means, stds = [], [], []
    for j in range(X.shape[1]):
        values, mean, std = _standardize(X[:, j])
        cols.append(values[:, None])
        means.append(mean)
        stds.append(std)
    if task == CLASSIFICATION:
        labels = np.unique(y)
        if labels.size != 2:
            raise DataError("classification target must be binary")
        y_out = (y == labels[1]).astype(float)
        target_params = None
        class_labels = (str(labels[0]), str(labels[1]))
    elif task == REGRESSION:
        y_out, t_mean, t_std = _standardize(y)
        if t_std == 0.0:
            raise DataError("regression target is constant")
        target_params = (t_mean, t_std)
        class_labels = None
    else:
        raise DataError(f"unknown task {task!r}")
    return PreparedDataset(
        X=np.hstack(cols),
        y=y_out,
        task=task,
        feature_names=names,
        column_names=names,
        groups={name: (j, j + 1) for j, name in enumerate(names)},
        scaler_mean=np.array(means),
        scaler_std=np.array(stds),
        target_params=target_params,
        class_labels=class_labels,
    )


def subset_rows(data: PreparedDataset, rows: np.ndarray) -> PreparedDataset:
    """A row-subset view of a prepared dataset (scaling params unchanged)."""
    return replace(data, X=data.X[rows], y=data.y[rows])


@dataclass(frozen=True)
class FoldPlan:
    """A reproducible k-fold assignment: ``assignments[i]`` is row i's fold."""

    seed: int
    k: int
    assignments: np.ndarray

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def kfold_split(n: int, k: int, seed: int) -> FoldPlan:
    """Randomly partition ``n`` rows into ``k`` folds of near-equal size.

    Fold sizes differ by at most one and the assignment is a pure function
    of ``(n, k, seed)``.
    """
    if k < 2:
        raise DataError(f"fold count must be at least 2, got {k}")
    if k > n:
        raise DataError(f"fold count {k} exceeds row count {n}")
    order = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    return FoldPlan(seed=seed, k=k, assignments=assignments)


# ---------------------------------------------------------------------------
# Dataset registry


@dataclass(frozen=True)
class DatasetEntry:
    """One row of the dataset registry manifest."""

    name: str
    path: str
    target: str
    task: str | None = None
    id_columns: tuple[str, ...] = ()


def load_registry(path: str | Path) -> list[DatasetEntry]:
    """Read a JSON registry; relative dataset paths resolve against it."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise DataError(f"{path}: registry must be a JSON list")
    out = []
    for e in entries:
        csv_path = Path(e["path"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        out.append(
            DatasetEntry(
                name=e["name"],
                path=str(csv_path),
                target=e["target"],
                task=e.get("task"),
                id_columns=tuple(e.get("id_columns", ())),
            )
        )
    return out


def load_entry(entry: DatasetEntry) -> PreparedDataset:
    """Load and preprocess one registry entry."""
    raw = load_csv(entry.path, target=entry.target, id_columns=entry.id_columns)
    return preprocess(raw, PreprocessConfig(task=entry.task, id_columns=entry.id_columns))


# ---------------------------------------------------------------------------
# Prepared-dataset artifacts


def save_prepared(data: PreparedDataset, path: str | Path) -> None:
    header = {
        "kind": "prepared-dataset",
        "task": data.task,
        "feature_names": list(data.feature_names),
        "column_names": list(data.column_names),
        "groups": {k: list(v) for k, v in data.groups.items()},
        "target_params": list(data.target_params) if data.target_params else None,
        "class_labels": list(data.class_labels) if data.class_labels else None,
        "dropped": data.dropped,
    }
    arrays = {
        "X": data.X,
        "y": data.y,
        "scaler_mean": data.scaler_mean,
        "scaler_std": data.scaler_std,
    }
    save_artifact(path, header, arrays)


def load_prepared(path: str | Path) -> PreparedDataset:
    header, arrays = load_artifact(path)
    if header.get("kind") != "prepared-dataset":
        raise DataError(f"{path}: not a prepared-dataset artifact")
    return PreparedDataset(
        X=arrays["X"],
        y=arrays["y"],
        task=header["task"],
        feature_names=tuple(header["feature_names"]),
        column_names=tuple(header["column_names"]),
        groups={k: (v[0], v[1]) for k, v in header["groups"].items()},
        scaler_mean=arrays["scaler_mean"],
        scaler_std=arrays["scaler_std"],
        target_params=tuple(header["target_params"]) if header["target_params"] else None,
        class_labels=tuple(header["class_labels"]) if header["class_labels"] else None,
        dropped=dict(header["dropped"]),
    )
