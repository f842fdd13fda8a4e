"""Interpretable scorecard pipeline.

Weight-of-evidence encodings for categoricals (raw, shrunk or clustered),
penalized smooths discretized into step functions by exact weighted
partitioning, and a final logistic model, with AIC/AUC/H-measure tuning and
imbalance-aware evaluation metrics. The heavy lifting lives in the compiled
extension; this package re-exports its public surface.
"""

from ._core import (
    Dataset,
    Model,
    Schema,
    __version__,
    auc,
    cross_validate,
    evaluate,
    fit,
    h_measure,
    kmeans_weighted,
    load_csv,
    load_model,
    load_model_json,
    parse_csv,
    weighted_brier,
)

__all__ = [
    "Dataset",
    "Model",
    "Schema",
    "__version__",
    "auc",
    "cross_validate",
    "evaluate",
    "fit",
    "h_measure",
    "kmeans_weighted",
    "load_csv",
    "load_model",
    "load_model_json",
    "parse_csv",
    "weighted_brier",
]
