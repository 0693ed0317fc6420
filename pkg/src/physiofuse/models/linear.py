"""Multinomial logistic regression fitted by backtracking gradient descent."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import Standardizer
from ..errors import NonFinite, SingleClass, WidthMismatch
from .config import LRConfig
from .ensemble import N_CLASSES, softmax


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray      # (K, F) on the standardized scale
    intercepts: np.ndarray   # (K,)
    mean: np.ndarray         # (F,) training means
    scale: np.ndarray        # (F,) training population std (1 where constant)
    feature_names: tuple[str, ...]
    params: dict = field(default_factory=dict)
    n_iter: int = 0

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise WidthMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        return (X - self.mean) / self.scale

    def margin(self, X) -> np.ndarray:
        return self.standardize(X) @ self.weights.T + self.intercepts

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.margin(X))


def loss_and_grad(params, Z, Y, l2):
    """Objective ``(sum CE + l2/2 * ||W||^2) / n`` and its gradient.

    ``params`` packs ``W`` (K x F) row-major followed by the K intercepts.
    """
    n, F = Z.shape
    K = Y.shape[1]
    W = params[:K * F].reshape(K, F)
    b = params[K * F:]
    S = Z @ W.T + b
    m = S.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(S - m).sum(axis=1))
    loss = (np.sum(lse - (S * Y).sum(axis=1)) + 0.5 * l2 * np.sum(W * W)) / n
    R = softmax(S) - Y
    gW = (R.T @ Z + l2 * W) / n
    gb = R.sum(axis=0) / n
    return float(loss), np.concatenate([gW.ravel(), gb])


def fit_logistic(train, config: LRConfig = LRConfig()) -> LinearModel:
    """Zero-initialized gradient descent with Armijo backtracking.

    Stops when the gradient norm drops below ``tol`` or after ``max_iter``
    iterations. Features are standardized with training statistics.
    """
    order = sorted(range(len(train)), key=lambda i: train.keys[i])
    X = train.X[order]
    y = np.asarray(train.y[order], dtype=np.intp)
    if len(np.unique(y)) < 2:
        raise SingleClass("training data holds a single class")
    std = Standardizer.fit(X)
    Z = std.transform(X)
    n, F = Z.shape
    K = N_CLASSES
    Y = np.eye(K)[y]
    theta = np.zeros(K * F + K)
    loss, g = loss_and_grad(theta, Z, Y, config.l2)
    step = 1.0
    it = 0
    for it in range(1, config.max_iter + 1):
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) < config.tol:
            break
        step = min(step * 2.0, 1e6)
        while True:
            cand = theta - step * g
            new_loss, new_g = loss_and_grad(cand, Z, Y, config.l2)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if step < 1e-20:
            # no representable decrease left: converged to working precision
            break
        if not np.isfinite(new_loss):
            raise NonFinite("logistic loss became non-finite")
        theta, loss, g = cand, new_loss, new_g
    W = theta[:K * F].reshape(K, F)
    return LinearModel(W, theta[K * F:].copy(), std.mean, std.scale, train.feature_names,
                       params={"model": "lr", **config.__dict__}, n_iter=it)
