"""Shapley attributions for the fitted models.

Tree models use path-dependent TreeSHAP with the training cover stored in
each node as the background distribution. Decision trees and forests are
explained on the probability scale, boosted models on the per-class raw
score. Linear models get exact linear SHAP against a background mean.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import EmptyInput, MissingCover, WidthMismatch
from .models.ensemble import EnsembleKind, TreeEnsemble
from .models.linear import LinearModel


@dataclass(frozen=True)
class ShapExplanation:
    """Attributions for one row: ``base_value[c] + phi[:, c].sum() == margin[c]``."""

    base_value: np.ndarray       # (K,)
    phi: np.ndarray              # (F, K)
    feature_values: np.ndarray   # (F,)
    feature_names: tuple[str, ...]
    row_key: tuple | None = None

    def output(self, class_index: int) -> float:
        return float(self.base_value[class_index] + self.phi[:, class_index].sum())


def _rows(model, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(model.feature_names):
        raise WidthMismatch(f"model expects {len(model.feature_names)} features, got {X.shape[1]}")
    return X


def tree_shap_values(model: TreeEnsemble, X) -> tuple[np.ndarray, np.ndarray]:
    """Base values ``(K,)`` and attributions ``(n_rows, F, K)`` for ``X``."""
    X = _rows(model, X)
    n, F = X.shape
    K = model.num_classes
    phi = np.zeros((n, F, K))
    base = np.zeros(K)
    for t, tree in enumerate(model.trees):
        if tree.cover.size == 0 or not np.all(tree.cover > 0):
            raise MissingCover(f"tree {t} lacks positive node covers")
        contrib = _core.tree_shap(tree.left, tree.right, tree.feature, tree.threshold,
                                  tree.value, tree.cover, X, tree.max_depth)
        if model.kind is EnsembleKind.BOOSTED:
            cls = model.tree_class[t]
            phi[:, :, cls] += contrib[:, :, 0]
            base[cls] += tree.expected_value()[0]
        else:
            phi += contrib
            base += tree.expected_value()
    if model.kind is EnsembleKind.BOOSTED:
        base += model.base_score
    else:
        phi /= len(model.trees)
        base /= len(model.trees)
    return base, phi


def tree_shap(model: TreeEnsemble, row, row_key=None) -> ShapExplanation:
    row = np.asarray(row, dtype=np.float64)
    base, phi = tree_shap_values(model, row)
    return ShapExplanation(base, phi[0], row.reshape(-1), tuple(model.feature_names), row_key)


def linear_shap(model: LinearModel, row, background_mean, row_key=None) -> ShapExplanation:
    """``phi[i, c] = w[c, i] * (z_i - zbar_i)`` on the standardized scale."""
    row = _rows(model, row)[0]
    bg = _rows(model, background_mean)
    z = model.standardize(row)[0]
    zb = model.standardize(bg)[0]
    phi = (model.weights * (z - zb)).T
    base = model.weights @ zb + model.intercepts
    return ShapExplanation(base, phi, row, tuple(model.feature_names), row_key)


def explain_rows(model, X, keys=None, background_mean=None) -> list[ShapExplanation]:
    X = np.asarray(X, dtype=np.float64)
    keys = keys if keys is not None else [None] * len(X)
    if isinstance(model, TreeEnsemble):
        base, phi = tree_shap_values(model, X)
        return [ShapExplanation(base, phi[i], X[i], tuple(model.feature_names), keys[i])
                for i in range(len(X))]
    if background_mean is None:
        background_mean = model.mean
    return [linear_shap(model, X[i], background_mean, keys[i]) for i in range(len(X))]


@dataclass(frozen=True)
class GlobalImportance:
    items: tuple[tuple[str, float], ...]

    def top(self, k: int):
        return self.items[:k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "feature", "mean_abs_shap"])
        for rank, (name, value) in enumerate(self.items, start=1):
            w.writerow([rank, name, f"{value:.17g}"])
        return buf.getvalue()


def global_importance(explanations, class_index: int) -> GlobalImportance:
    """Mean ``|phi|`` per feature for one class, descending (ties by name)."""
    if not explanations:
        raise EmptyInput("no explanations to aggregate")
    names = explanations[0].feature_names
    width = len(names)
    if any(len(e.feature_names) != width for e in explanations):
        raise WidthMismatch("explanations differ in width")
    mean_abs = np.mean([np.abs(e.phi[:, class_index]) for e in explanations], axis=0)
    items = sorted(zip(names, (float(v) for v in mean_abs)), key=lambda t: (-t[1], t[0]))
    return GlobalImportance(tuple(items))


def importance_from_csv(text: str) -> GlobalImportance:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["rank", "feature", "mean_abs_shap"]:
        raise ValueError("importance CSV header must be rank,feature,mean_abs_shap")
    return GlobalImportance(tuple((r[1], float(r[2])) for r in rows[1:] if r))


@dataclass(frozen=True)
class WaterfallStep:
    feature: str
    value: float
    contribution: float
    cumulative: float


@dataclass(frozen=True)
class Waterfall:
    base_value: float
    steps: tuple[WaterfallStep, ...]
    remainder: float
    final: float

    def to_dict(self) -> dict:
        return {"base_value": self.base_value,
                "steps": [s.__dict__ for s in self.steps],
                "remainder": self.remainder, "final": self.final}


def waterfall(explanation: ShapExplanation, top_k: int = 10, class_index: int = 0) -> Waterfall:
    """Base value, the ``top_k`` largest-``|phi|`` steps, then one remainder term."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    phi = explanation.phi[:, class_index]
    base = float(explanation.base_value[class_index])
    # stable sort keeps feature order among equal magnitudes
    order = sorted(range(len(phi)), key=lambda i: -abs(phi[i]))
    chosen = order[:top_k]
    steps = []
    running = base
    for i in chosen:
        running += float(phi[i])
        steps.append(WaterfallStep(explanation.feature_names[i],
                                   float(explanation.feature_values[i]), float(phi[i]), running))
    rest = order[top_k:]
    remainder = float(np.sum(phi[rest])) if rest else 0.0
    return Waterfall(base, tuple(steps), remainder, running + remainder)


def shap_document(explanations, class_index: int, feature_names=None) -> dict:
    """The ``shap.json`` payload: ``{class, base_value, rows: [{row_key, features}]}``."""
    if not explanations:
        raise EmptyInput("no explanations")
    names = feature_names or explanations[0].feature_names
    return {
        "class": int(class_index),
        "base_value": float(explanations[0].base_value[class_index]),
        "rows": [
            {"row_key": list(e.row_key) if e.row_key is not None else None,
             "features": [{"name": n, "value": float(v), "phi": float(p)}
                          for n, v, p in zip(names, e.feature_values, e.phi[:, class_index])]}
            for e in explanations
        ],
    }


def shap_json(explanations, n_classes: int) -> str:
    """All classes as a JSON list of per-class ``shap_document`` payloads."""
    return json.dumps([shap_document(explanations, c) for c in range(n_classes)], indent=1)
