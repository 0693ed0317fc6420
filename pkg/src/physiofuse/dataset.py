"""Feature matrices, train/test splits and train-only standardization."""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InfeasibleCombination, SingleClass, TooFewSessions
from .features import (
    Kind,
    ModalityCombination,
    PairDescriptors,
    extract_features,
    parse_feature_name,
    segment_descriptors,
)
from .segmentation import Segment


@dataclass(frozen=True)
class FeatureMatrix:
    feature_names: tuple[str, ...]
    X: np.ndarray                       # (n_rows, n_features)
    y: np.ndarray                       # (n_rows,) int class codes
    keys: tuple[tuple[str, int], ...]   # (session_id, window_index) per row
    combination: ModalityCombination | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        if X.size != len(self.keys) * len(self.feature_names):
            raise ValueError(f"{X.shape} values do not fit {len(self.keys)} rows x "
                             f"{len(self.feature_names)} feature names")
        X = X.reshape(len(self.keys), len(self.feature_names))
        y = np.array(self.y, dtype=np.int64, copy=True).reshape(-1)
        if len(y) != X.shape[0]:
            raise ValueError("label vector length differs from row count")
        if not np.all(np.isfinite(X)):
            raise ValueError("feature matrix contains NaN or Inf")
        if len(set(self.keys)) != len(self.keys):
            raise ValueError("duplicate row keys")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "keys", tuple((str(s), int(w)) for s, w in self.keys))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return FeatureMatrix(self.feature_names, self.X[rows], self.y[rows],
                             tuple(self.keys[i] for i in rows), self.combination)

    def select_features(self, names) -> "FeatureMatrix":
        pos = {n: i for i, n in enumerate(self.feature_names)}
        missing = [n for n in names if n not in pos]
        if missing:
            raise KeyError(f"unknown features: {missing}")
        cols = [pos[n] for n in names]
        return FeatureMatrix(tuple(names), self.X[:, cols], self.y, self.keys, self.combination)

    def restrict_kind(self, kind: Kind) -> "FeatureMatrix":
        kind = Kind(kind)
        return self.select_features([n for n in self.feature_names
                                     if parse_feature_name(n)[2] is kind])

    def class_counts(self, n_classes=3) -> np.ndarray:
        return np.bincount(self.y, minlength=n_classes)


class DescriptorCache:
    """Per-segment descriptors shared across modality combinations."""

    def __init__(self, lag_ms: float = 500.0):
        self.lag_ms = lag_ms
        self._store: dict[tuple[str, int], PairDescriptors] = {}

    def get(self, segment: Segment) -> PairDescriptors:
        d = self._store.get(segment.key)
        if d is None:
            d = self._store[segment.key] = segment_descriptors(segment, self.lag_ms)
        return d


def build_matrix(segments, combination: ModalityCombination, lag_ms: float = 500.0,
                 cache: DescriptorCache | None = None, allowlist=None) -> FeatureMatrix:
    """Stack feature vectors of ``segments`` in (session_id, window_index) order."""
    if not combination.feasible:
        raise InfeasibleCombination(f"{combination.name} has fewer than two channels")
    segments = sorted(segments, key=lambda s: s.key)
    if not segments:
        raise EmptyInput("no segments to build a feature matrix from")
    cache = cache or DescriptorCache(lag_ms)
    vectors = [extract_features(s, combination, lag_ms, cache.get(s)) for s in segments]
    names = vectors[0].names
    for v in vectors[1:]:
        if v.names != names:
            raise ValueError(f"segment {v.key} yields a different feature layout")
    fm = FeatureMatrix(names, np.stack([v.values for v in vectors]),
                       np.array([int(v.label) for v in vectors]),
                       tuple(v.key for v in vectors), combination)
    if allowlist:
        fm = fm.select_features([n for n in names if n in set(allowlist)])
    return fm


# --- splits -----------------------------------------------------------------

class SplitMode(str, enum.Enum):
    STRATIFIED = "stratified"
    GROUPED = "grouped"


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    mode: SplitMode = SplitMode.STRATIFIED
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", SplitMode(self.mode))
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class Split:
    train: FeatureMatrix
    test: FeatureMatrix
    spec: SplitSpec = field(default_factory=SplitSpec)

    def manifest(self) -> dict:
        return {
            "mode": self.spec.mode.value,
            "seed": self.spec.seed,
            "train_fraction": self.spec.train_fraction,
            "train": [list(k) for k in self.train.keys],
            "test": [list(k) for k in self.test.keys],
        }


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split(matrix: FeatureMatrix, spec: SplitSpec = SplitSpec()) -> Split:
    """Seeded train/test split; rows keep their original relative order.

    The shuffle runs over rows sorted by key, so the result depends on row
    identity rather than row position.
    """
    if len(matrix) < 2:
        raise EmptyInput("need at least two rows to split")
    order = sorted(range(len(matrix)), key=lambda i: matrix.keys[i])
    rng = np.random.default_rng(spec.seed)
    if spec.mode is SplitMode.STRATIFIED:
        classes = sorted(set(int(c) for c in matrix.y))
        if len(classes) < 2:
            raise SingleClass("stratified split needs at least two classes")
        train_rows = []
        for c in classes:
            members = np.array([i for i in order if matrix.y[i] == c], dtype=np.intp)
            n_train = _round_half_up(len(members) * spec.train_fraction)
            train_rows.extend(members[rng.permutation(len(members))[:n_train]].tolist())
    else:
        sessions = sorted({k[0] for k in matrix.keys})
        if len(sessions) < 2:
            raise TooFewSessions("grouped split needs at least two sessions")
        sizes = {s: 0 for s in sessions}
        for s, _ in matrix.keys:
            sizes[s] += 1
        shuffled = [sessions[i] for i in rng.permutation(len(sessions))]
        # largest first (shuffle order breaks ties); take a session only if
        # it keeps the train side at or under the target row count
        ranked = sorted(shuffled, key=lambda s: -sizes[s])
        target = spec.train_fraction * len(matrix)
        chosen, total = [], 0
        for s in ranked:
            if total + sizes[s] <= target + 1e-9:
                chosen.append(s)
                total += sizes[s]
        if not chosen:
            chosen = [ranked[-1]]
        chosen = set(chosen)
        train_rows = [i for i in order if matrix.keys[i][0] in chosen]
    train_set = set(train_rows)
    train_idx = sorted(train_set)
    test_idx = [i for i in range(len(matrix)) if i not in train_set]
    return Split(matrix.take(train_idx), matrix.take(test_idx), spec)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        sd = np.sqrt(np.mean((X - mean) ** 2, axis=0))
        return cls(mean, np.where(sd > 1e-12, sd, 1.0))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


# --- serialization ----------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def matrix_to_csv(matrix: FeatureMatrix) -> str:
    """Header ``session_id,window_index,<features...>,label``; 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["session_id", "window_index", *matrix.feature_names, "label"])
    for key, row, label in zip(matrix.keys, matrix.X, matrix.y):
        w.writerow([key[0], key[1], *(_fmt(v) for v in row), int(label)])
    return buf.getvalue()


def matrix_from_csv(text: str, combination=None) -> FeatureMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise EmptyInput("empty feature CSV")
    header = rows[0]
    if header[:2] != ["session_id", "window_index"] or header[-1] != "label":
        raise ValueError("feature CSV header must be session_id,window_index,...,label")
    names = tuple(header[2:-1])
    body = [r for r in rows[1:] if r]
    X = np.array([[float(v) for v in r[2:-1]] for r in body]).reshape(len(body), len(names))
    y = np.array([int(r[-1]) for r in body], dtype=np.int64)
    keys = tuple((r[0], int(r[1])) for r in body)
    return FeatureMatrix(names, X, y, keys, combination)


def matrix_to_json(matrix: FeatureMatrix) -> str:
    records = [
        {"session_id": k[0], "window_index": k[1], "label": int(lab),
         "features": dict(zip(matrix.feature_names, (float(v) for v in row)))}
        for k, row, lab in zip(matrix.keys, matrix.X, matrix.y)
    ]
    doc = {"combination": matrix.combination.name if matrix.combination else None,
           "feature_names": list(matrix.feature_names), "records": records}
    return json.dumps(doc, indent=1)


def matrix_from_json(text: str) -> FeatureMatrix:
    doc = json.loads(text)
    names = tuple(doc["feature_names"])
    recs = doc["records"]
    X = np.array([[r["features"][n] for n in names] for r in recs],
                 dtype=np.float64).reshape(len(recs), len(names))
    comb = ModalityCombination.parse(doc["combination"]) if doc.get("combination") else None
    return FeatureMatrix(names, X, [r["label"] for r in recs],
                         tuple((r["session_id"], r["window_index"]) for r in recs), comb)
