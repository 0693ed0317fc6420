"""The four classifiers and a uniform prediction interface."""
from __future__ import annotations

import numpy as np

from .config import DTConfig, GBDTConfig, LRConfig, RFConfig, TrainConfig
from .ensemble import (
    N_CLASSES,
    EnsembleKind,
    TreeEnsemble,
    fit_decision_tree,
    fit_gbdt,
    fit_random_forest,
    softmax,
    softmax_loss,
)
from .linear import LinearModel, fit_logistic, loss_and_grad
from .serialize import dumps, load, loads, save
from .tree import Tree

# classifier labels as printed in the report tables
CLASSIFIERS = ("DT", "RF", "LR", "XGBOOST")


def _rows(rows):
    return rows.X if hasattr(rows, "X") else np.asarray(rows, dtype=np.float64)


def predict_proba(model, rows) -> np.ndarray:
    """Per-row class probabilities for a FeatureMatrix or a 2-D array."""
    return model.predict_proba(_rows(rows))


def margin(model, rows) -> np.ndarray:
    return model.margin(_rows(rows))


def predict(model, rows) -> np.ndarray:
    """Argmax class; ties go to the lowest class index."""
    return np.argmax(predict_proba(model, rows), axis=1)


def fit(classifier: str, train, config: TrainConfig = TrainConfig()):
    """Fit one of ``CLASSIFIERS`` with its section of ``config``."""
    name = classifier.upper()
    if name == "DT":
        return fit_decision_tree(train, config.dt)
    if name == "RF":
        return fit_random_forest(train, config.rf)
    if name == "LR":
        return fit_logistic(train, config.lr)
    if name in ("XGBOOST", "GBDT"):
        return fit_gbdt(train, config.gbdt)
    raise ValueError(f"unknown classifier {classifier!r}; choose from {CLASSIFIERS}")


__all__ = [
    "CLASSIFIERS", "DTConfig", "EnsembleKind", "GBDTConfig", "LRConfig", "LinearModel",
    "N_CLASSES", "RFConfig", "TrainConfig", "Tree", "TreeEnsemble", "dumps", "fit",
    "fit_decision_tree", "fit_gbdt", "fit_logistic", "fit_random_forest", "load", "loads",
    "loss_and_grad", "margin", "predict", "predict_proba", "save", "softmax", "softmax_loss",
]
