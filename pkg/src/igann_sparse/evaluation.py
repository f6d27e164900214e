"""Metrics, paired significance testing and the cross-validation benchmark.

The benchmark protocol: for each dataset and each repeat seed, draw a fresh
k-fold plan, fit every registered model per fold, and collect one metric
sample per (seed, fold) cell. AUROC (classification) and RMSE on the
standardized target (regression) are the comparison metrics. Full-vs-sparse
comparisons run a Wilcoxon signed-rank test with a non-inferiority tolerance
of one standard deviation of the full model's samples; sparse-vs-lasso runs
without tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import lasso_select
from .data import (
    CLASSIFICATION,
    REGRESSION,
    DatasetEntry,
    FoldPlan,
    PreparedDataset,
    kfold_split,
    load_entry,
    subset_rows,
)
from .gam import IGANNConfig, fit, predict, predict_raw
from .seeding import derive_seed

IGANN_FULL = "igann_full"
IGANN_SPARSE = "igann_sparse"
LASSO = "lasso"
KNOWN_MODELS = (IGANN_FULL, IGANN_SPARSE, LASSO)


def auroc(y: np.ndarray, scores: np.ndarray) -> float:
    """Probability that a random positive outranks a random negative.

    Mann-Whitney formulation with tied scores counted half. Requires both
    classes to be present.
    """
    y = np.asarray(y, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if y.shape != scores.shape:
        raise ValueError(f"length mismatch: y {y.shape} vs scores {scores.shape}")
    pos = y == 1.0
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC undefined: only one class present")
    ranks = _average_ranks(scores)
    u = float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0])
    sorted_vals = values[order]
    i = 0
    while i < sorted_vals.shape[0]:
        j = i
        while j + 1 < sorted_vals.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def rmse(y: np.ndarray, pred: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if y.shape != pred.shape:
        raise ValueError(f"length mismatch: y {y.shape} vs pred {pred.shape}")
    return float(np.sqrt(np.mean((y - pred) ** 2)))


@dataclass(frozen=True)
class WilcoxonResult:
    """Signed-rank test outcome; ``statistic`` is ``min(W+, W-)``."""

    statistic: float
    p_value: float
    n_effective: int
    better: str
    degenerate: bool = False
    tolerance: float = 0.0
    exact: bool = True


# sample-size threshold below which the exact null distribution is enumerated
EXACT_LIMIT = 25


def _exact_signed_rank_p(ranks: np.ndarray, w: float) -> float:
    """P(min(W+, W-) weight <= w), doubled for two sides, via subset-sum counting.

    Equivalent to enumerating all 2^n sign assignments of the observed ranks.
    Tied ranks average to half-integers, so doubling makes every weight an
    integer.
    """
    scaled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(scaled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    top = 0
    for r in scaled:
        counts[r : top + r + 1] += counts[: top + 1]
        top += r
    w2 = int(math.floor(2.0 * w + 1e-9))
    p_low = counts[: w2 + 1].sum() / 2.0 ** len(ranks)
    return min(1.0, 2.0 * p_low)


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def wilcoxon_signed_rank(
    a: np.ndarray,
    b: np.ndarray,
    tolerance: float = 0.0,
    greater_is_better: bool = True,
    labels: tuple[str, str] = ("a", "b"),
) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    A positive ``tolerance`` shifts the differences in favor of ``b`` (the
    challenger) before ranking: ``b`` is treated as non-inferior whenever it
    trails ``a`` by no more than the tolerance. Zero differences are dropped
    and tied ranks averaged. The exact null distribution is enumerated for up
    to 25 effective pairs; beyond that a normal approximation with tie
    correction and continuity correction is used. Fewer than 5 nonzero
    differences degenerates to ``p = 1``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    if a.shape[0] < 5:
        raise ValueError("need at least 5 pairs")
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    diff = a - b
    diff = diff - tolerance if greater_is_better else diff + tolerance

    diff = diff[diff != 0.0]
    n_eff = diff.shape[0]
    if n_eff < 5:
        return WilcoxonResult(
            statistic=0.0, p_value=1.0, n_effective=n_eff, better="tie",
            degenerate=True, tolerance=tolerance,
        )
    ranks = _average_ranks(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    w = min(w_plus, w_minus)

    exact = n_eff <= EXACT_LIMIT
    if exact:
        p = _exact_signed_rank_p(ranks, w)
    else:
        mean = n_eff * (n_eff + 1) / 4.0
        _, tie_counts = np.unique(np.abs(diff), return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        var = n_eff * (n_eff + 1) * (2 * n_eff + 1) / 24.0 - tie_term
        z = (w - mean + 0.5) / math.sqrt(var)
        p = min(1.0, 2.0 * _normal_cdf(z))

    # a positive adjusted difference means a's metric exceeded b's
    if w_plus == w_minus:
        better = "tie"
    elif (w_plus > w_minus) == greater_is_better:
        better = labels[0]
    else:
        better = labels[1]
    return WilcoxonResult(
        statistic=w, p_value=p, n_effective=n_eff, better=better,
        tolerance=tolerance, exact=exact,
    )


# ---------------------------------------------------------------------------
# Benchmark harness


@dataclass(frozen=True)
class MetricSample:
    dataset: str
    model: str
    seed: int
    fold: int
    value: float
    n_selected: int
    pct_selected: float


@dataclass
class DatasetResult:
    task: str
    n: int
    n_columns: int
    metric: str
    means: dict[str, float] = field(default_factory=dict)
    sds: dict[str, float] = field(default_factory=dict)
    pct_selected: dict[str, float] = field(default_factory=dict)
    wilcoxon: dict[str, WilcoxonResult] = field(default_factory=dict)


@dataclass
class BenchmarkReport:
    models: list[str]
    repeats: int
    folds: int
    config: dict
    datasets: list[str] = field(default_factory=list)
    results: dict[str, DatasetResult] = field(default_factory=dict)
    samples: list[MetricSample] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "protocol": {
                "models": self.models,
                "repeats": self.repeats,
                "folds": self.folds,
                "config": self.config,
            },
            "datasets": {
                name: {
                    "task": r.task,
                    "n": r.n,
                    "n_columns": r.n_columns,
                    "metric": r.metric,
                    "models": {
                        model: {
                            "mean": r.means[model],
                            "sd": r.sds[model],
                            "pct_selected_mean": r.pct_selected[model],
                        }
                        for model in self.models
                        if model in r.means
                    },
                    "wilcoxon": {
                        key: {
                            "statistic": w.statistic,
                            "p_value": w.p_value,
                            "n_effective": w.n_effective,
                            "better": w.better,
                            "degenerate": w.degenerate,
                            "tolerance": w.tolerance,
                            "exact": w.exact,
                        }
                        for key, w in r.wilcoxon.items()
                    },
                }
                for name, r in self.results.items()
            },
            "errors": self.errors,
            "samples": [
                {
                    "dataset": s.dataset,
                    "model": s.model,
                    "seed": s.seed,
                    "fold": s.fold,
                    "value": s.value,
                    "n_selected": s.n_selected,
                    "pct_selected": s.pct_selected,
                }
                for s in self.samples
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            f"benchmark: {self.repeats} repeats x {self.folds} folds "
            f"({self.repeats * self.folds} samples per cell)",
            "",
        ]
        header = (
            f"{'dataset':<16}{'task':<16}{'metric':<8}"
            + "".join(f"{m + ' (mean±sd)':<26}" for m in self.models)
            + f"{'%feat sparse':<14}{'%feat lasso':<14}"
        )
        lines.append(header)
        lines.append("-" * len(header))
        for name in self.datasets:
            if name in self.errors:
                lines.append(f"{name:<16}ERROR: {self.errors[name]}")
                continue
            r = self.results[name]
            stars: dict[str, str] = {m: "" for m in self.models}
            w = r.wilcoxon.get("full_vs_sparse")
            if w and not w.degenerate and w.better in (IGANN_FULL, IGANN_SPARSE):
                if w.p_value <= 0.01:
                    stars[w.better] = "**"
                elif w.p_value <= 0.05:
                    stars[w.better] = "*"
            row = f"{name:<16}{r.task:<16}{r.metric:<8}"
            for m in self.models:
                if m in r.means:
                    cell = f"{r.means[m]:.3f} ±{r.sds[m]:.3f}{stars.get(m, '')}"
                else:
                    cell = "-"
                row += f"{cell:<26}"
            pct_s = r.pct_selected.get(IGANN_SPARSE)
            pct_l = r.pct_selected.get(LASSO)
            row += f"{100 * pct_s:.1f} %{'':<8}" if pct_s is not None else f"{'-':<14}"
            row += f"{100 * pct_l:.1f} %" if pct_l is not None else "-"
            lines.append(row)
        lines.append("")
        for name in self.datasets:
            if name in self.errors:
                continue
            for key, w in self.results[name].wilcoxon.items():
                lines.append(
                    f"{name}: {key}: W={w.statistic:.1f} p={w.p_value:.5f} "
                    f"better={w.better} tol={w.tolerance:.6f} n_eff={w.n_effective}"
                )
        return "\n".join(lines) + "\n"


def _fit_and_score(
    model_name: str,
    data: PreparedDataset,
    train: np.ndarray,
    test: np.ndarray,
    seed: int,
    config: IGANNConfig,
) -> tuple[float, int]:
    """Fit one model on the train rows, return (metric value, columns selected)."""
    d_train = subset_rows(data, train)
    X_test, y_test = data.X[test], data.y[test]
    if model_name in (IGANN_FULL, IGANN_SPARSE):
        cfg = replace(config, sparse=model_name == IGANN_SPARSE, seed=seed, task=data.task)
        model = fit(d_train, cfg)
        n_selected = int(model.active_cols.sum())
        if data.task == CLASSIFICATION:
            return auroc(y_test, predict(model, X_test)), n_selected
        return rmse(y_test, predict_raw(model, X_test)), n_selected
    if model_name == LASSO:
        inner = kfold_split(train.shape[0], min(5, train.shape[0]), derive_seed(seed, "lasso-cv"))
        selection = lasso_select(d_train, inner)
        n_selected = selection.n_selected_columns
        link = selection.model.predict_link(X_test)
        if data.task == CLASSIFICATION:
            return auroc(y_test, link), n_selected
        return rmse(y_test, link), n_selected
    raise ValueError(f"unknown model {model_name!r}; known: {', '.join(KNOWN_MODELS)}")


def run_benchmark(
    registry: list[DatasetEntry],
    models: list[str] | None = None,
    repeats: int = 20,
    folds: int = 5,
    config: IGANNConfig | None = None,
) -> BenchmarkReport:
    """Execute the repeated cross-validation protocol over a dataset registry.

    Per-dataset failures (unreadable files, preprocessing errors) are
    recorded in ``report.errors`` and the run continues.
    """
    models = list(models) if models is not None else list(KNOWN_MODELS)
    for m in models:
        if m not in KNOWN_MODELS:
            raise ValueError(f"unknown model {m!r}; known: {', '.join(KNOWN_MODELS)}")
    config = config or IGANNConfig()
    report = BenchmarkReport(
        models=models, repeats=repeats, folds=folds, config=_config_dict(config)
    )
    for entry in registry:
        report.datasets.append(entry.name)
        try:
            data = load_entry(entry)
            result = _run_dataset(entry.name, data, models, repeats, folds, config, report)
        except Exception as exc:  # noqa: BLE001 - per-dataset isolation is the contract
            report.errors[entry.name] = str(exc)
            continue
        report.results[entry.name] = result
    return report


def _run_dataset(
    name: str,
    data: PreparedDataset,
    models: list[str],
    repeats: int,
    folds: int,
    config: IGANNConfig,
    report: BenchmarkReport,
) -> DatasetResult:
    metric = "auroc" if data.task == CLASSIFICATION else "rmse"
    values: dict[str, list[float]] = {m: [] for m in models}
    pcts: dict[str, list[float]] = {m: [] for m in models}
    for seed in range(repeats):
        plan = kfold_split(data.n, folds, seed)
        for fold in range(folds):
            train, test = plan.train_rows(fold), plan.test_rows(fold)
            for model_name in models:
                fit_seed = derive_seed(seed, name, model_name, fold)
                value, n_selected = _fit_and_score(model_name, data, train, test, fit_seed, config)
                pct = n_selected / data.n_columns
                values[model_name].append(value)
                pcts[model_name].append(pct)
                report.samples.append(
                    MetricSample(
                        dataset=name, model=model_name, seed=seed, fold=fold,
                        value=value, n_selected=n_selected, pct_selected=pct,
                    )
                )
    result = DatasetResult(
        task=data.task, n=data.n, n_columns=data.n_columns, metric=metric
    )
    for m in models:
        arr = np.asarray(values[m])
        result.means[m] = float(arr.mean())
        result.sds[m] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        result.pct_selected[m] = float(np.mean(pcts[m]))
    greater = data.task == CLASSIFICATION
    if IGANN_FULL in models and IGANN_SPARSE in models:
        full = np.asarray(values[IGANN_FULL])
        sparse = np.asarray(values[IGANN_SPARSE])
        result.wilcoxon["full_vs_sparse"] = _paired_test(
            full, sparse,
            tolerance=float(full.std(ddof=1)) if full.size > 1 else 0.0,
            greater_is_better=greater, labels=(IGANN_FULL, IGANN_SPARSE),
        )
    if IGANN_SPARSE in models and LASSO in models:
        result.wilcoxon["sparse_vs_lasso"] = _paired_test(
            np.asarray(values[IGANN_SPARSE]), np.asarray(values[LASSO]),
            tolerance=0.0, greater_is_better=greater, labels=(IGANN_SPARSE, LASSO),
        )
    return result


def _paired_test(a, b, tolerance, greater_is_better, labels) -> WilcoxonResult:
    """Signed-rank test that degenerates instead of raising on tiny protocols."""
    if a.size < 5:
        return WilcoxonResult(
            statistic=0.0, p_value=1.0, n_effective=0, better="tie",
            degenerate=True, tolerance=tolerance,
        )
    return wilcoxon_signed_rank(
        a, b, tolerance=tolerance, greater_is_better=greater_is_better, labels=labels
    )


def _config_dict(config: IGANNConfig) -> dict:
    return {
        "k": config.k,
        "n_rounds": config.n_rounds,
        "learning_rate": config.learning_rate,
        "lam": config.lam,
        "s_max": config.s_max,
        "early_stop_patience": config.early_stop_patience,
        "val_fraction": config.val_fraction,
        "activation": config.activation,
        "df_mode": config.df_mode,
    }


# ---------------------------------------------------------------------------
# Feature-count sweep


@dataclass(frozen=True)
class SweepPoint:
    n_features: int
    metric_mean: float
    metric_sd: float


def sweep_features(
    data: PreparedDataset,
    counts: list[int],
    config: IGANNConfig | None = None,
    folds: int = 5,
    seed: int = 0,
) -> list[SweepPoint]:
    """Cross-validated metric as a function of the forced support size.

    Each count fits the sparse model with the selected block count pinned to
    exactly that value (count 0 gives the intercept-only model). The same
    fold plan is reused across counts so points are paired.
    """
    config = config or IGANNConfig()
    for c in counts:
        if c < 0 or c > data.n_columns:
            raise ValueError(f"count {c} outside [0, {data.n_columns}]")
    plan = kfold_split(data.n, folds, derive_seed(seed, "sweep-folds"))
    points = []
    for c in counts:
        cell_values = []
        for fold in range(folds):
            train, test = plan.train_rows(fold), plan.test_rows(fold)
            cfg = replace(
                config,
                sparse=True,
                force_size=c,
                s_max=None,
                seed=derive_seed(seed, "sweep", c, fold),
                task=data.task,
            )
            model = fit(subset_rows(data, train), cfg)
            if data.task == CLASSIFICATION:
                cell_values.append(auroc(data.y[test], predict(model, data.X[test])))
            else:
                cell_values.append(rmse(data.y[test], predict_raw(model, data.X[test])))
        arr = np.asarray(cell_values)
        points.append(
            SweepPoint(
                n_features=c,
                metric_mean=float(arr.mean()),
                metric_sd=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            )
        )
    return points


def sweep_csv(points: list[SweepPoint], provenance: dict | None = None) -> str:
    lines = []
    if provenance:
        lines.append("# " + json.dumps(provenance, sort_keys=True))
    lines.append("n_features,metric_mean,metric_sd")
    for p in points:
        lines.append(f"{p.n_features},{p.metric_mean!r},{p.metric_sd!r}")
    return "\n".join(lines) + "\n"
