"""Outlier detectors with pixel-wise explanations and Clever Hans scoring."""

from ._core import (
    ConfigError,
    DataError,
    Detector,
    Error,
    NumericalError,
    ShapeError,
    __version__,
    clever_hans_score,
    explanation_accuracy,
    fit_autoencoder,
    fit_bag,
    fit_deep,
    fit_kde,
    load_dataset,
    load_detector,
    roc_auc,
    run_cli,
    synthesize,
    write_synthetic,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Detector",
    "Error",
    "NumericalError",
    "ShapeError",
    "__version__",
    "clever_hans_score",
    "explanation_accuracy",
    "fit_autoencoder",
    "fit_bag",
    "fit_deep",
    "fit_kde",
    "load_dataset",
    "load_detector",
    "roc_auc",
    "run_cli",
    "synthesize",
    "write_synthetic",
]
