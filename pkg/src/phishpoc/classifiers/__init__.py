"""Seven classical phishing detectors behind one train/predict contract."""

from .base import (
    ALGORITHMS,
    DEFAULTS,
    ClassifierSpec,
    TrainedModel,
    grid_search,
    predict,
    stratified_folds,
    train,
)

__all__ = [
    "ALGORITHMS",
    "DEFAULTS",
    "ClassifierSpec",
    "TrainedModel",
    "grid_search",
    "predict",
    "stratified_folds",
    "train",
]
