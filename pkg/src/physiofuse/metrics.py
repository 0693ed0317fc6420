"""Accuracy, weighted precision/recall, one-vs-rest AUC and confusion matrices."""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import rankdata

from .errors import LengthMismatch, SingleClass, UndefinedPrecision, UnknownLabelIndex

TABLE3_COLUMNS = ("Classifier", "Signal Type", "Accuracy", "Precision", "Recall", "AUC")


@dataclass(frozen=True)
class ClassStats:
    precision: float
    recall: float
    support: int
    precision_undefined: bool = False


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision_weighted: float
    recall_weighted: float
    auc_ovr: float | None
    per_class: tuple[ClassStats, ...]
    confusion: np.ndarray
    precision_macro: float = 0.0
    recall_macro: float = 0.0
    auc_ovr_weighted: float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["confusion"] = self.confusion.tolist()
        d["per_class"] = [asdict(c) for c in self.per_class]
        d["flags"] = list(self.flags)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def table_row(self, classifier: str, signal_type: str) -> list[str]:
        """One row in the ``Classifier, Signal Type, Accuracy, Precision, Recall, AUC`` layout."""
        auc = "" if self.auc_ovr is None else f"{self.auc_ovr:.6f}"
        return [classifier, signal_type, f"{self.accuracy:.6f}", f"{self.precision_weighted:.6f}",
                f"{self.recall_weighted:.6f}", auc]


def _check(probas, labels):
    P = np.asarray(probas, dtype=np.float64)
    y = np.asarray(labels)
    if P.ndim != 2 or len(P) != len(y):
        raise LengthMismatch(f"{len(P)} probability rows for {len(y)} labels")
    if len(y) == 0:
        raise LengthMismatch("no rows to evaluate")
    if y.min() < 0 or y.max() >= P.shape[1]:
        raise UnknownLabelIndex(f"labels must lie in 0..{P.shape[1] - 1}")
    return P, y.astype(np.intp)


def binary_auc(scores, positive) -> float:
    """Mann-Whitney AUC with ties counted as one half."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positive, dtype=bool)
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both positive and negative rows")
    ranks = rankdata(s, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_ovr(probas, labels, average: str = "macro") -> float:
    """One-vs-rest AUC averaged over the classes present in ``labels``."""
    P, y = _check(probas, labels)
    present = np.unique(y)
    if len(present) < 2:
        raise SingleClass("one-vs-rest AUC is undefined with a single class")
    aucs = np.array([binary_auc(P[:, k], y == k) for k in present])
    if average == "macro":
        return float(aucs.mean())
    if average == "weighted":
        support = np.array([np.sum(y == k) for k in present], dtype=np.float64)
        return float((aucs * support).sum() / support.sum())
    raise ValueError(f"unknown average {average!r}")


def confusion_matrix(labels, predictions, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(labels, dtype=np.intp), np.asarray(predictions, dtype=np.intp)), 1)
    return cm


def _weighted(support, num, den) -> float:
    """Support-weighted mean of ``num / den``, exact in rationals then rounded once."""
    total = sum((Fraction(int(s) * int(a), int(b)) for s, a, b in zip(support, num, den) if b),
                Fraction(0))
    return float(total / int(support.sum()))


def evaluate(probas, labels) -> EvalReport:
    """Full report; predictions are the per-row argmax (lowest index on ties)."""
    P, y = _check(probas, labels)
    K = P.shape[1]
    pred = np.argmax(P, axis=1)
    cm = confusion_matrix(y, pred, K)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    tp = np.diag(cm)
    flags = []
    stats = []
    for k in range(K):
        undefined = predicted[k] == 0
        precision = 0.0 if undefined else tp[k] / predicted[k]
        recall = tp[k] / support[k] if support[k] else 0.0
        if undefined and support[k]:
            flags.append(f"precision_undefined:class_{k}")
        stats.append(ClassStats(float(precision), float(recall), int(support[k]), bool(undefined)))
    if any(s.precision_undefined and s.support for s in stats):
        warnings.warn("some classes were never predicted; their precision is reported as 0",
                      UndefinedPrecision, stacklevel=2)
    n = len(y)
    present = support > 0
    prec = np.array([s.precision for s in stats])
    rec = np.array([s.recall for s in stats])
    try:
        auc = auc_ovr(P, y)
        auc_w = auc_ovr(P, y, average="weighted")
    except SingleClass:
        auc = auc_w = None
        flags.append("auc_undefined:single_class")
    return EvalReport(
        accuracy=float(np.trace(cm) / n),
        precision_weighted=_weighted(support, tp, predicted),
        recall_weighted=_weighted(support, tp, support),
        auc_ovr=auc,
        per_class=tuple(stats),
        confusion=cm,
        precision_macro=float(prec[present].mean()),
        recall_macro=float(rec[present].mean()),
        auc_ovr_weighted=auc_w,
        flags=tuple(flags),
    )


def one_hot_probas(predictions, n_classes: int) -> np.ndarray:
    """Hard predictions as a probability matrix (handy for worked examples)."""
    return np.eye(n_classes)[np.asarray(predictions, dtype=np.intp)]
