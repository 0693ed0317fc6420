"""Versioned JSON model files.

Schema (``format_version`` 1)::

    {"format": "physiofuse-model", "format_version": 1,
     "model_type": "tree_ensemble" | "linear", "feature_names": [...],
     "params": {...hyperparameters and seed...},
     # tree_ensemble
     "kind": "single_tree" | "forest" | "boosted", "num_classes": 3,
     "base_score": [...], "tree_class": [...], "train_loss": [...],
     "trees": [{"left", "right", "feature", "threshold", "value", "cover"}, ...],
     # linear
     "weights": [[...]], "intercepts": [...], "mean": [...], "scale": [...], "n_iter": N}

Floats are written with Python's shortest round-trip repr, so a load
reproduces predictions bit-for-bit.
"""
from __future__ import annotations

import json

import numpy as np

from .ensemble import TreeEnsemble
from .linear import LinearModel
from .tree import Tree

FORMAT = "physiofuse-model"
FORMAT_VERSION = 1


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if hasattr(v, "value") and not isinstance(v, (int, float, str)):
        return v.value
    return v


def model_to_dict(model) -> dict:
    doc = {"format": FORMAT, "format_version": FORMAT_VERSION,
           "feature_names": list(model.feature_names), "params": _jsonable(model.params)}
    if isinstance(model, TreeEnsemble):
        doc.update(
            model_type="tree_ensemble", kind=model.kind.value, num_classes=model.num_classes,
            base_score=model.base_score.tolist(), tree_class=list(model.tree_class),
            train_loss=list(model.train_loss), trees=[t.to_dict() for t in model.trees])
    elif isinstance(model, LinearModel):
        doc.update(
            model_type="linear", weights=model.weights.tolist(),
            intercepts=model.intercepts.tolist(), mean=model.mean.tolist(),
            scale=model.scale.tolist(), n_iter=model.n_iter)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise ValueError("not a physiofuse model file")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    names = tuple(doc["feature_names"])
    if doc["model_type"] == "tree_ensemble":
        return TreeEnsemble(doc["kind"], tuple(Tree.from_dict(t) for t in doc["trees"]),
                            doc["num_classes"], names, np.array(doc["base_score"], dtype=np.float64),
                            tuple(doc["tree_class"]), doc["params"], tuple(doc["train_loss"]))
    if doc["model_type"] == "linear":
        return LinearModel(np.array(doc["weights"], dtype=np.float64),
                           np.array(doc["intercepts"], dtype=np.float64),
                           np.array(doc["mean"], dtype=np.float64),
                           np.array(doc["scale"], dtype=np.float64), names, doc["params"],
                           doc["n_iter"])
    raise ValueError(f"unknown model_type {doc['model_type']!r}")


def dumps(model) -> str:
    return json.dumps(model_to_dict(model), separators=(",", ":"))


def loads(text: str):
    return model_from_dict(json.loads(text))


def save(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
