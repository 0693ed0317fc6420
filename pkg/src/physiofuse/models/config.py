"""Hyperparameters for the four classifiers."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields


def _positive(name, value):
    if value is not None and not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")


def _unit(name, value):
    if not 0 < value <= 1:
        raise ValueError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True)
class DTConfig:
    max_depth: int | None = None
    min_samples_leaf: int = 1

    def __post_init__(self):
        _positive("max_depth", self.max_depth)
        _positive("min_samples_leaf", self.min_samples_leaf)


@dataclass(frozen=True)
class RFConfig:
    n_trees: int = 1000
    max_features: str | int | float = "sqrt"
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        _positive("n_trees", self.n_trees)
        _positive("max_depth", self.max_depth)
        _positive("min_samples_leaf", self.min_samples_leaf)
        if isinstance(self.max_features, str) and self.max_features not in ("sqrt", "all"):
            raise ValueError("max_features must be 'sqrt', 'all', an int or a fraction")

    def n_candidates(self, n_features: int) -> int:
        m = self.max_features
        if m == "sqrt":
            k = math.ceil(math.sqrt(n_features))
        elif m == "all":
            k = n_features
        elif isinstance(m, float):
            k = math.ceil(m * n_features)
        else:
            k = int(m)
        return max(1, min(n_features, k))


@dataclass(frozen=True)
class LRConfig:
    l2: float = 1.0
    max_iter: int = 2000
    tol: float = 1e-8

    def __post_init__(self):
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        _positive("max_iter", self.max_iter)
        _positive("tol", self.tol)


@dataclass(frozen=True)
class GBDTConfig:
    n_rounds: int = 300
    learning_rate: float = 0.1
    max_depth: int = 6
    subsample: float = 0.8
    colsample: float = 0.8
    l2: float = 1.0
    min_child_weight: float = 0.0
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        _positive("n_rounds", self.n_rounds)
        _positive("max_depth", self.max_depth)
        _positive("min_samples_leaf", self.min_samples_leaf)
        _unit("learning_rate", self.learning_rate)
        _unit("subsample", self.subsample)
        _unit("colsample", self.colsample)
        if self.l2 < 0 or self.min_child_weight < 0:
            raise ValueError("l2 and min_child_weight must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    dt: DTConfig = field(default_factory=DTConfig)
    rf: RFConfig = field(default_factory=RFConfig)
    lr: LRConfig = field(default_factory=LRConfig)
    gbdt: GBDTConfig = field(default_factory=GBDTConfig)

    @classmethod
    def from_dict(cls, d: dict | None, seed: int | None = None) -> "TrainConfig":
        d = dict(d or {})
        parts = {}
        for name, klass in (("dt", DTConfig), ("rf", RFConfig), ("lr", LRConfig),
                            ("gbdt", GBDTConfig)):
            sub = dict(d.pop(name, None) or {})
            known = {f.name for f in fields(klass)}
            unknown = set(sub) - known
            if unknown:
                raise ValueError(f"models.{name}: unknown keys {sorted(unknown)}")
            if seed is not None and "seed" in known:
                sub.setdefault("seed", seed)
            parts[name] = klass(**sub)
        if d:
            raise ValueError(f"models: unknown sections {sorted(d)}")
        return cls(**parts)

    def to_dict(self) -> dict:
        return asdict(self)
