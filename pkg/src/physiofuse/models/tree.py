"""Flat-array decision trees and the two growers (Gini and second-order gain)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _core

LEAF = -1


@dataclass(frozen=True)
class Tree:
    """Binary tree in parallel arrays; node 0 is the root.

    Internal node ``i`` sends a row left when ``x[feature[i]] < threshold[i]``.
    Leaves have ``left[i] == right[i] == -1``. ``value`` is ``(n_nodes, V)``:
    the class distribution for classification trees, a single raw score for
    boosting trees. ``cover`` counts the training rows reaching each node.
    """

    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    def __post_init__(self):
        for name, dtype in (("left", np.intp), ("right", np.intp), ("feature", np.intp),
                            ("threshold", np.float64), ("cover", np.float64)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        value = np.ascontiguousarray(self.value, dtype=np.float64)
        if value.ndim == 1:
            value = value[:, None]
        value.setflags(write=False)
        object.__setattr__(self, "value", value)

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] == LEAF

    @property
    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.left[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def used_features(self) -> set[int]:
        return {int(f) for f, l in zip(self.feature, self.left) if l != LEAF}

    def apply(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _core.apply_tree(self.left, self.right, self.feature, self.threshold, X)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def expected_value(self) -> np.ndarray:
        """Cover-weighted mean of the leaf values."""
        leaves = self.left == LEAF
        return (self.value[leaves] * self.cover[leaves, None]).sum(axis=0) / self.cover[0]

    def to_dict(self) -> dict:
        return {
            "left": self.left.tolist(), "right": self.right.tolist(),
            "feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
            "value": self.value.tolist(), "cover": self.cover.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(np.array(d["left"]), np.array(d["right"]), np.array(d["feature"]),
                   np.array(d["threshold"], dtype=np.float64),
                   np.array(d["value"], dtype=np.float64), np.array(d["cover"], dtype=np.float64))


class _Builder:
    def __init__(self, n_values):
        self.left, self.right, self.feature = [], [], []
        self.threshold, self.value, self.cover = [], [], []
        self.n_values = n_values

    def add(self, value, cover):
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.value.append(value)
        self.cover.append(cover)
        return len(self.left) - 1

    def tree(self):
        return Tree(np.array(self.left), np.array(self.right), np.array(self.feature),
                    np.array(self.threshold), np.array(self.value).reshape(-1, self.n_values),
                    np.array(self.cover))


def presort(X) -> np.ndarray:
    """Stable ascending argsort of every column, shaped ``(n_features, n_rows)``."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T, dtype=np.intp)


def grow_classifier(X, y, counts, order, n_classes, *, max_depth=None, min_samples_leaf=1,
                    feature_sampler=None) -> Tree:
    """Greedy Gini tree over the rows weighted by ``counts``.

    ``feature_sampler()`` returns the candidate feature indices for one
    split; by default every feature is a candidate.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    n_features = X.shape[1]
    all_features = np.arange(n_features, dtype=np.intp)
    b = _Builder(n_classes)

    def dist(c):
        hist = np.bincount(y, weights=c, minlength=n_classes)
        return hist / hist.sum(), float(hist.sum()), int(np.count_nonzero(hist))

    counts = np.ascontiguousarray(counts, dtype=np.intp)
    value, cover, n_present = dist(counts)
    root = b.add(value, cover)
    stack = [(root, counts, 0, n_present)]
    while stack:
        node, c, depth, n_present = stack.pop()
        if n_present < 2 or (max_depth is not None and depth >= max_depth):
            continue
        if b.cover[node] < 2 * min_samples_leaf:
            continue
        feats = all_features if feature_sampler is None else feature_sampler()
        f, thr, _ = _core.best_split_gini(X, y, c, order, feats, n_classes, min_samples_leaf)
        if f < 0:
            continue
        goes_left = X[:, f] < thr
        c_left = np.where(goes_left, c, 0)
        c_right = c - c_left
        vl, cl, nl = dist(c_left)
        vr, cr, nr = dist(c_right)
        li = b.add(vl, cl)
        ri = b.add(vr, cr)
        b.left[node], b.right[node] = li, ri
        b.feature[node], b.threshold[node] = int(f), float(thr)
        # right pushed first so the left subtree is expanded first
        stack.append((ri, c_right, depth + 1, nr))
        stack.append((li, c_left, depth + 1, nl))
    return b.tree()


def grow_regressor(X, grad, hess, counts, order, features, *, max_depth=6, lam=1.0,
                   learning_rate=0.1, min_samples_leaf=1, min_child_weight=0.0) -> Tree:
    """Second-order boosting tree; leaf value ``-learning_rate * G / (H + lam)``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    hess = np.ascontiguousarray(hess, dtype=np.float64)
    features = np.ascontiguousarray(np.sort(features), dtype=np.intp)
    b = _Builder(1)

    def leaf(c):
        w = c.astype(np.float64)
        G = np.cumsum(w * grad)[-1]
        H = np.cumsum(w * hess)[-1]
        return -learning_rate * G / (H + lam), float(w.sum())

    counts = np.ascontiguousarray(counts, dtype=np.intp)
    value, cover = leaf(counts)
    root = b.add([value], cover)
    stack = [(root, counts, 0)]
    while stack:
        node, c, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        f, thr, gain = _core.best_split_gain(X, grad, hess, c, order, features, lam,
                                             min_samples_leaf, min_child_weight)
        if f < 0 or not gain > 0:
            continue
        goes_left = X[:, f] < thr
        c_left = np.where(goes_left, c, 0)
        c_right = c - c_left
        vl, cl = leaf(c_left)
        vr, cr = leaf(c_right)
        li = b.add([vl], cl)
        ri = b.add([vr], cr)
        b.left[node], b.right[node] = li, ri
        b.feature[node], b.threshold[node] = int(f), float(thr)
        stack.append((ri, c_right, depth + 1))
        stack.append((li, c_left, depth + 1))
    return b.tree()
