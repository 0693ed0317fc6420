"""Decision tree, random forest and second-order gradient boosting."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInput, SingleClass, WidthMismatch
from .config import DTConfig, GBDTConfig, RFConfig
from .tree import Tree, grow_classifier, grow_regressor, presort

N_CLASSES = 3


class EnsembleKind(str, enum.Enum):
    SINGLE_TREE = "single_tree"
    FOREST = "forest"
    BOOSTED = "boosted"


@dataclass(frozen=True)
class TreeEnsemble:
    kind: EnsembleKind
    trees: tuple[Tree, ...]
    num_classes: int
    feature_names: tuple[str, ...]
    base_score: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tree_class: tuple[int, ...] = ()
    params: dict = field(default_factory=dict)
    train_loss: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "base_score", np.asarray(self.base_score, dtype=np.float64))

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise WidthMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def margin(self, X) -> np.ndarray:
        """Explained output: class probabilities for DT/RF, raw scores for boosting."""
        X = self._check(X)
        if self.kind is EnsembleKind.BOOSTED:
            out = np.tile(self.base_score, (X.shape[0], 1))
            for tree, cls in zip(self.trees, self.tree_class):
                out[:, cls] += tree.predict(X)[:, 0]
            return out
        acc = np.zeros((X.shape[0], self.num_classes))
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def predict_proba(self, X) -> np.ndarray:
        m = self.margin(X)
        if self.kind is EnsembleKind.BOOSTED:
            return softmax(m)
        return m / m.sum(axis=1, keepdims=True)


def softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _canonical(train):
    """Rows sorted by key so sampling follows row identity, not position."""
    if len(train) == 0:
        raise EmptyInput("empty training matrix")
    order = sorted(range(len(train)), key=lambda i: train.keys[i])
    X = np.ascontiguousarray(train.X[order])
    y = np.ascontiguousarray(train.y[order], dtype=np.intp)
    if len(np.unique(y)) < 2:
        raise SingleClass("training data holds a single class")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise ValueError(f"labels must be in 0..{N_CLASSES - 1}")
    return X, y


def fit_decision_tree(train, config: DTConfig = DTConfig()) -> TreeEnsemble:
    X, y = _canonical(train)
    tree = grow_classifier(X, y, np.ones(len(y), dtype=np.intp), presort(X), N_CLASSES,
                           max_depth=config.max_depth, min_samples_leaf=config.min_samples_leaf)
    return TreeEnsemble(EnsembleKind.SINGLE_TREE, (tree,), N_CLASSES, train.feature_names,
                        params={"model": "dt", **config.__dict__})


def fit_random_forest(train, config: RFConfig = RFConfig()) -> TreeEnsemble:
    X, y = _canonical(train)
    n, F = X.shape
    order = presort(X)
    k = config.n_candidates(F)
    rng = np.random.default_rng(config.seed)

    def sampler():
        return np.sort(rng.choice(F, size=k, replace=False)).astype(np.intp)

    trees = []
    for _ in range(config.n_trees):
        if config.bootstrap:
            counts = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.intp)
        else:
            counts = np.ones(n, dtype=np.intp)
        trees.append(grow_classifier(X, y, counts, order, N_CLASSES,
                                     max_depth=config.max_depth,
                                     min_samples_leaf=config.min_samples_leaf,
                                     feature_sampler=None if k == F else sampler))
    return TreeEnsemble(EnsembleKind.FOREST, tuple(trees), N_CLASSES, train.feature_names,
                        params={"model": "rf", **config.__dict__})


def softmax_loss(scores, y) -> float:
    """Mean multiclass cross-entropy of raw ``scores`` against labels ``y``."""
    s = np.asarray(scores, dtype=np.float64)
    m = s.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(s - m).sum(axis=1))
    return float(np.mean(lse - s[np.arange(len(y)), y]))


def fit_gbdt(train, config: GBDTConfig = GBDTConfig()) -> TreeEnsemble:
    """Softmax boosting: one second-order regression tree per class per round.

    Rows are subsampled once per round and columns once per tree, both from
    the seeded generator. ``train_loss`` records the training cross-entropy
    before the first round and after every round.
    """
    X, y = _canonical(train)
    n, F = X.shape
    K = N_CLASSES
    order = presort(X)
    rng = np.random.default_rng(config.seed)
    prior = np.bincount(y, minlength=K) / n
    base = np.log(np.clip(prior, 1e-12, None))
    onehot = np.eye(K)[y]
    scores = np.tile(base, (n, 1))
    n_rows = max(1, int(round(config.subsample * n)))
    n_cols = max(1, int(round(config.colsample * F)))
    trees, tree_class = [], []
    losses = [softmax_loss(scores, y)]
    for _ in range(config.n_rounds):
        p = softmax(scores)
        grad = p - onehot
        hess = p * (1.0 - p)
        if n_rows < n:
            counts = np.zeros(n, dtype=np.intp)
            counts[rng.choice(n, size=n_rows, replace=False)] = 1
        else:
            counts = np.ones(n, dtype=np.intp)
        round_update = np.zeros_like(scores)
        for cls in range(K):
            if n_cols < F:
                feats = np.sort(rng.choice(F, size=n_cols, replace=False))
            else:
                feats = np.arange(F)
            tree = grow_regressor(X, grad[:, cls], hess[:, cls], counts, order, feats,
                                  max_depth=config.max_depth, lam=config.l2,
                                  learning_rate=config.learning_rate,
                                  min_samples_leaf=config.min_samples_leaf,
                                  min_child_weight=config.min_child_weight)
            trees.append(tree)
            tree_class.append(cls)
            round_update[:, cls] = tree.predict(X)[:, 0]
        scores = scores + round_update
        losses.append(softmax_loss(scores, y))
    return TreeEnsemble(EnsembleKind.BOOSTED, tuple(trees), K, train.feature_names,
                        base_score=base, tree_class=tuple(tree_class),
                        params={"model": "gbdt", **config.__dict__}, train_loss=tuple(losses))
