"""Boosted-ELM generalized additive model with an optional sparsity layer.

Training fits a sequence of extreme learning machines to pseudo-residuals
(stagewise gradient boosting on the link scale), each stage added with
shrinkage. In sparse mode, block-wise best-subset selection runs on the first
layer's activations and freezes the active column mask for all rounds. The
fitted model decomposes additively per design-matrix column, which is what
makes the per-feature shape functions exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .artifacts import load_artifact, save_artifact
from .data import CLASSIFICATION, REGRESSION, PreparedDataset
from .elm import ACTIVATIONS, ELMLayer, activations, init_layer, restrict_layer, ridge_fit
from .seeding import derive_seed
from .subset import LossSpec, SubsetSelection, best_subset, sigmoid


@dataclass(frozen=True)
class IGANNConfig:
    """Hyperparameters for :func:`fit`. All fields have working defaults."""

    k: int = 10
    n_rounds: int = 100
    learning_rate: float = 0.1
    lam: float = 1e-3
    sparse: bool = False
    s_max: int | None = None
    early_stop_patience: int = 5
    val_fraction: float = 0.15
    seed: int = 0
    task: str | None = None
    activation: str = "elu"
    df_mode: str = "coefficients"
    # fix the selected support to exactly this size (feature-count sweep)
    force_size: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be nonnegative")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not 0.0 <= self.val_fraction <= 0.5:
            raise ValueError("val_fraction must be in [0, 0.5]")
        if self.early_stop_patience < 0:
            raise ValueError("early_stop_patience must be nonnegative")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.task not in (None, CLASSIFICATION, REGRESSION):
            raise ValueError(f"unknown task {self.task!r}")
        if self.df_mode not in ("coefficients", "blocks"):
            raise ValueError(f"unknown df_mode {self.df_mode!r}")
        if self.force_size is not None and self.force_size < 0:
            raise ValueError("force_size must be nonnegative")


@dataclass(frozen=True)
class Stage:
    """One boosting round: a random layer and its fitted output coefficients."""

    layer: ELMLayer
    beta: np.ndarray
    intercept: float


@dataclass(frozen=True)
class ShapeFunction:
    """Per-column model contribution on a grid (standardized input units, link scale)."""

    feature: str
    grid: np.ndarray
    values: np.ndarray


@dataclass
class IGANNModel:
    """Fitted additive ensemble.

    ``intercept`` is the base initialization (target mean for regression,
    base-rate log-odds for classification); stage offsets and shape-function
    centering are folded into :attr:`effective_intercept`, against which the
    additive decomposition ``predict_raw(x) = effective_intercept +
    sum_j shape_j(x_j)`` is exact. ``active_cols`` masks the design-matrix
    columns the model reads; unselected columns cannot influence predictions.
    """

    config: IGANNConfig
    task: str
    intercept: float
    stages: list[Stage]
    active_cols: np.ndarray
    feature_names: tuple[str, ...]
    column_names: tuple[str, ...]
    groups: dict[str, tuple[int, int]]
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    target_params: tuple[float, float] | None
    class_labels: tuple[str, str] | None
    col_min: np.ndarray
    col_max: np.ndarray
    centers: np.ndarray
    selection: SubsetSelection | None = None
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    empty_selection: bool = False

    @property
    def n_columns(self) -> int:
        return self.active_cols.shape[0]

    @property
    def effective_intercept(self) -> float:
        lr = self.config.learning_rate
        stage_offsets = sum(stage.intercept for stage in self.stages)
        return self.intercept + lr * stage_offsets + float(self.centers.sum())


def _loss(task: str, y: np.ndarray, link: np.ndarray) -> float:
    if task == REGRESSION:
        return float(np.mean((y - link) ** 2))
    p = np.clip(sigmoid(link), 1e-12, 1.0 - 1e-12)
    return -float(np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def _base_intercept(task: str, y: np.ndarray) -> float:
    if task == REGRESSION:
        return float(np.mean(y))
    rate = min(max(float(np.mean(y)), 1e-12), 1.0 - 1e-12)
    return math.log(rate / (1.0 - rate))


def fit(data: PreparedDataset, config: IGANNConfig | None = None) -> IGANNModel:
    """Train on a prepared dataset.

    Boosting runs for up to ``config.n_rounds`` rounds; with a validation
    holdout the loop stops once validation loss has not improved for
    ``early_stop_patience`` rounds and the model is truncated to its best
    round. In sparse mode an empty selection degrades to an intercept-only
    model with :attr:`IGANNModel.empty_selection` set (a warning, not an
    error, so batch runs proceed).
    """
    config = config or IGANNConfig()
    task = config.task or data.task
    if config.task is not None and config.task != data.task:
        raise ValueError(f"config task {config.task!r} does not match data task {data.task!r}")
    X, y = data.X, data.y
    n, p = X.shape

    n_val = int(round(config.val_fraction * n))
    use_val = n_val >= 1 and n - n_val >= 1 and config.n_rounds > 0 and config.early_stop_patience > 0
    if use_val:
        order = np.random.default_rng(derive_seed(config.seed, "val-split")).permutation(n)
        val_idx, tr_idx = order[:n_val], order[n_val:]
    else:
        tr_idx = np.arange(n)
        val_idx = np.empty(0, dtype=int)
    X_tr, y_tr = X[tr_idx], y[tr_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    intercept = _base_intercept(task, y_tr)
    spec = LossSpec(task)

    active = np.ones(p, dtype=bool)
    selection: SubsetSelection | None = None
    first_layer = init_layer(p, config.k, config.activation, derive_seed(config.seed, "layer", 0))
    empty_selection = False
    if config.sparse:
        acts0 = activations(first_layer, X_tr)
        s_max = min(p, config.s_max) if config.s_max is not None else min(p, 50)
        sizes = None if config.force_size is None else [config.force_size]
        selection = best_subset(
            acts0, y_tr, spec, s_max=s_max, lam=config.lam, sizes=sizes, df_mode=config.df_mode
        )
        active = np.zeros(p, dtype=bool)
        if selection.size == 0:
            empty_selection = True
            warnings.warn("sparsity layer selected no blocks; returning intercept-only model")
        else:
            active[list(selection.blocks)] = True
            first_layer = restrict_layer(first_layer, selection.blocks)

    X_tr_a = X_tr[:, active]
    X_val_a = X_val[:, active]
    n_active = int(active.sum())

    F_tr = np.full(X_tr.shape[0], intercept)
    F_val = np.full(X_val.shape[0], intercept)
    train_losses = [_loss(task, y_tr, F_tr)]
    val_losses = [_loss(task, y_val, F_val)] if use_val else []
    stages: list[Stage] = []
    best_val = val_losses[0] if use_val else math.inf
    best_round = 0

    rounds = 0 if n_active == 0 else config.n_rounds
    for t in range(1, rounds + 1):
        residual = y_tr - F_tr if task == REGRESSION else y_tr - sigmoid(F_tr)
        if t == 1:
            layer = first_layer
        else:
            layer = init_layer(
                n_active, config.k, config.activation, derive_seed(config.seed, "layer", t)
            )
        acts = activations(layer, X_tr_a)
        coef = ridge_fit(acts, residual, lam=config.lam)
        F_tr = F_tr + config.learning_rate * (acts.values @ coef.beta + coef.intercept)
        stages.append(Stage(layer=layer, beta=coef.beta, intercept=coef.intercept))
        train_losses.append(_loss(task, y_tr, F_tr))
        if not np.isfinite(train_losses[-1]):
            raise ValueError(f"non-finite training loss at round {t}")
        if use_val:
            acts_val = activations(layer, X_val_a)
            F_val = F_val + config.learning_rate * (acts_val.values @ coef.beta + coef.intercept)
            val_losses.append(_loss(task, y_val, F_val))
            if val_losses[-1] < best_val:
                best_val = val_losses[-1]
                best_round = t
            elif t - best_round >= config.early_stop_patience:
                break
        else:
            best_round = t
    stages = stages[:best_round]
    train_losses = train_losses[: best_round + 1]
    if use_val:
        val_losses = val_losses[: best_round + 1]

    model = IGANNModel(
        config=config,
        task=task,
        intercept=intercept,
        stages=stages,
        active_cols=active,
        feature_names=data.feature_names,
        column_names=data.column_names,
        groups=dict(data.groups),
        scaler_mean=data.scaler_mean,
        scaler_std=data.scaler_std,
        target_params=data.target_params,
        class_labels=data.class_labels,
        col_min=X.min(axis=0) if n else np.zeros(p),
        col_max=X.max(axis=0) if n else np.zeros(p),
        centers=np.zeros(n_active),
        selection=selection,
        train_losses=train_losses,
        val_losses=val_losses,
        empty_selection=empty_selection,
    )
    if stages:
        contrib = _column_contributions(model, X[:, active])
        model.centers = contrib.mean(axis=0)
    return model


def _column_contributions(model: IGANNModel, X_active: np.ndarray) -> np.ndarray:
    """Per-active-column contribution of all stages, shape (n, n_active)."""
    n = X_active.shape[0]
    n_active = X_active.shape[1]
    total = np.zeros((n, n_active))
    lr = model.config.learning_rate
    for stage in model.stages:
        acts = activations(stage.layer, X_active)
        per_unit = acts.values.reshape(n, n_active, acts.k)
        total += lr * np.einsum("nak,ak->na", per_unit, stage.beta.reshape(n_active, acts.k))
    return total


def _check_layout(model: IGANNModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_columns:
        raise ValueError(f"X must have {model.n_columns} columns, got shape {X.shape}")
    return X


def predict_raw(model: IGANNModel, X: np.ndarray) -> np.ndarray:
    """Link-scale predictions: intercept plus the sum of all stage outputs."""
    X = _check_layout(model, X)
    out = np.full(X.shape[0], model.intercept)
    X_active = X[:, model.active_cols]
    lr = model.config.learning_rate
    for stage in model.stages:
        acts = activations(stage.layer, X_active)
        out = out + lr * (acts.values @ stage.beta + stage.intercept)
    return out


def predict(model: IGANNModel, X: np.ndarray) -> np.ndarray:
    """Predictions in target units: probabilities for classification,
    inverse-standardized values for regression."""
    raw = predict_raw(model, X)
    if model.task == CLASSIFICATION:
        return sigmoid(raw)
    if model.target_params is None:
        return raw
    mean, std = model.target_params
    return raw * std + mean


def _resolve_column(model: IGANNModel, feature: str) -> int:
    if feature in model.column_names:
        return model.column_names.index(feature)
    if feature in model.groups:
        start, stop = model.groups[feature]
        if stop - start == 1:
            return start
        raise ValueError(
            f"feature {feature!r} spans columns {start}..{stop - 1}; "
            f"request one of its dummy columns by name"
        )
    raise ValueError(f"unknown feature {feature!r}")


def shape_values(model: IGANNModel, feature: str, x: np.ndarray) -> np.ndarray:
    """One column's centered additive contribution at arbitrary input values."""
    j = _resolve_column(model, feature)
    if not model.active_cols[j]:
        raise ValueError(f"feature not in model: {feature!r}")
    active_index = int(model.active_cols[:j].sum())
    x = np.asarray(x, dtype=float)
    values = np.zeros(x.shape[0])
    lr = model.config.learning_rate
    for stage in model.stages:
        w = stage.layer.weights[active_index]
        b = stage.layer.biases[active_index]
        act = ACTIVATIONS[stage.layer.activation]
        block = stage.beta[active_index * stage.layer.k : (active_index + 1) * stage.layer.k]
        values += lr * (act(x[:, None] * w[None, :] + b[None, :]) @ block)
    return values - model.centers[active_index]


def shape_function(model: IGANNModel, feature: str, grid_size: int = 100) -> ShapeFunction:
    """Evaluate one column's additive contribution on a training-range grid.

    Contributions are mean-centered over the training data, with the removed
    mass absorbed into :attr:`IGANNModel.effective_intercept`.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    j = _resolve_column(model, feature)
    grid = np.linspace(model.col_min[j], model.col_max[j], grid_size)
    return ShapeFunction(
        feature=model.column_names[j], grid=grid, values=shape_values(model, feature, grid)
    )


def shape_functions(model: IGANNModel, grid_size: int = 100) -> list[ShapeFunction]:
    """Shape functions for every active column."""
    return [
        shape_function(model, name, grid_size)
        for name, is_active in zip(model.column_names, model.active_cols)
        if is_active
    ]


def selected_features(model: IGANNModel) -> tuple[str, ...]:
    """Original features with at least one active design-matrix column."""
    out = []
    for name in model.feature_names:
        start, stop = model.groups[name]
        if model.active_cols[start:stop].any():
            out.append(name)
    return tuple(out)


# ---------------------------------------------------------------------------
# Model artifacts


def save_model(model: IGANNModel, path) -> None:
    """Serialize to a deterministic artifact; round-trips bit-exactly."""
    cfg = model.config
    header = {
        "kind": "igann-model",
        "config": {
            "k": cfg.k,
            "n_rounds": cfg.n_rounds,
            "learning_rate": cfg.learning_rate,
            "lam": cfg.lam,
            "sparse": cfg.sparse,
            "s_max": cfg.s_max,
            "early_stop_patience": cfg.early_stop_patience,
            "val_fraction": cfg.val_fraction,
            "seed": cfg.seed,
            "task": cfg.task,
            "activation": cfg.activation,
            "df_mode": cfg.df_mode,
            "force_size": cfg.force_size,
        },
        "task": model.task,
        "feature_names": list(model.feature_names),
        "column_names": list(model.column_names),
        "groups": {k: list(v) for k, v in model.groups.items()},
        "class_labels": list(model.class_labels) if model.class_labels else None,
        "n_stages": len(model.stages),
        "stage_seeds": [stage.layer.seed for stage in model.stages],
        "empty_selection": model.empty_selection,
        "selection": None
        if model.selection is None
        else {
            "blocks": list(model.selection.blocks),
            "bic": model.selection.bic,
            "log_lik": model.selection.log_lik,
            "trace": [list(t) for t in model.selection.trace],
        },
    }
    arrays: dict[str, np.ndarray] = {
        "intercept": np.array([model.intercept]),
        "active_cols": model.active_cols.astype(np.uint8),
        "scaler_mean": model.scaler_mean,
        "scaler_std": model.scaler_std,
        "col_min": model.col_min,
        "col_max": model.col_max,
        "centers": model.centers,
        "train_losses": np.asarray(model.train_losses),
        "val_losses": np.asarray(model.val_losses),
        "target_params": np.asarray(model.target_params if model.target_params else []),
        "stage_intercepts": np.array([stage.intercept for stage in model.stages]),
    }
    if model.selection is not None:
        arrays["selection_beta"] = model.selection.beta
        arrays["selection_intercept"] = np.array([model.selection.intercept])
    for i, stage in enumerate(model.stages):
        arrays[f"stage{i}_weights"] = stage.layer.weights
        arrays[f"stage{i}_biases"] = stage.layer.biases
        arrays[f"stage{i}_beta"] = stage.beta
    save_artifact(path, header, arrays)


def load_model(path) -> IGANNModel:
    header, arrays = load_artifact(path)
    if header.get("kind") != "igann-model":
        raise ValueError(f"{path}: not a model artifact")
    cfg = IGANNConfig(**header["config"])
    stage_intercepts = arrays["stage_intercepts"]
    stages = [
        Stage(
            layer=ELMLayer(
                weights=arrays[f"stage{i}_weights"],
                biases=arrays[f"stage{i}_biases"],
                activation=cfg.activation,
                seed=header["stage_seeds"][i],
            ),
            beta=arrays[f"stage{i}_beta"],
            intercept=float(stage_intercepts[i]),
        )
        for i in range(header["n_stages"])
    ]
    sel_header = header["selection"]
    selection = None
    if sel_header is not None:
        selection = SubsetSelection(
            blocks=tuple(sel_header["blocks"]),
            beta=arrays["selection_beta"],
            intercept=float(arrays["selection_intercept"][0]),
            bic=sel_header["bic"],
            log_lik=sel_header["log_lik"],
            trace=tuple((int(s), float(v)) for s, v in sel_header["trace"]),
        )
    tp = arrays["target_params"]
    return IGANNModel(
        config=cfg,
        task=header["task"],
        intercept=float(arrays["intercept"][0]),
        stages=stages,
        active_cols=arrays["active_cols"].astype(bool),
        feature_names=tuple(header["feature_names"]),
        column_names=tuple(header["column_names"]),
        groups={k: (v[0], v[1]) for k, v in header["groups"].items()},
        scaler_mean=arrays["scaler_mean"],
        scaler_std=arrays["scaler_std"],
        target_params=(float(tp[0]), float(tp[1])) if tp.size else None,
        class_labels=tuple(header["class_labels"]) if header["class_labels"] else None,
        col_min=arrays["col_min"],
        col_max=arrays["col_max"],
        centers=arrays["centers"],
        selection=selection,
        train_losses=[float(v) for v in arrays["train_losses"]],
        val_losses=[float(v) for v in arrays["val_losses"]],
        empty_selection=bool(header["empty_selection"]),
    )
