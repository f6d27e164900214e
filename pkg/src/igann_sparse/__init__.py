"""Sparse generalized additive modelling with boosted extreme learning machines.

A GAM is trained as a boosted sequence of ELMs whose hidden weights are
random and fixed; only the linear output layer is fitted. The sparse variant
adds a block-wise best-subset selection layer, scored by BIC, to the first
ELM, fixing the model's active feature set for all later boosting rounds.
"""

from .baselines import LassoModel, LassoSelection, lasso_fit, lasso_select
from .data import (
    CLASSIFICATION,
    REGRESSION,
    DataError,
    DatasetEntry,
    FoldPlan,
    PreparedDataset,
    PreprocessConfig,
    RawDataset,
    kfold_split,
    load_csv,
    load_registry,
    prepare_arrays,
    preprocess,
)
from .elm import BlockActivations, ELMLayer, OutputCoefficients, activations, init_layer, ridge_fit
from .evaluation import (
    BenchmarkReport,
    MetricSample,
    WilcoxonResult,
    auroc,
    rmse,
    run_benchmark,
    sweep_features,
    wilcoxon_signed_rank,
)
from .gam import (
    IGANNConfig,
    IGANNModel,
    ShapeFunction,
    fit,
    load_model,
    predict,
    predict_raw,
    save_model,
    selected_features,
    shape_function,
)
from .subset import LossSpec, SubsetSelection, best_subset, bic, log_likelihood

__version__ = "0.1.0"

__all__ = [
    "CLASSIFICATION",
    "REGRESSION",
    "BenchmarkReport",
    "BlockActivations",
    "DataError",
    "DatasetEntry",
    "ELMLayer",
    "FoldPlan",
    "IGANNConfig",
    "IGANNModel",
    "LassoModel",
    "LassoSelection",
    "LossSpec",
    "MetricSample",
    "OutputCoefficients",
    "PreparedDataset",
    "PreprocessConfig",
    "RawDataset",
    "ShapeFunction",
    "SubsetSelection",
    "WilcoxonResult",
    "activations",
    "auroc",
    "best_subset",
    "bic",
    "fit",
    "init_layer",
    "kfold_split",
    "lasso_fit",
    "lasso_select",
    "load_csv",
    "load_model",
    "load_registry",
    "log_likelihood",
    "predict",
    "predict_raw",
    "prepare_arrays",
    "preprocess",
    "ridge_fit",
    "rmse",
    "run_benchmark",
    "save_model",
    "selected_features",
    "shape_function",
    "sweep_features",
    "wilcoxon_signed_rank",
]
