"""Pairwise channel descriptors: Pearson correlation, covariance and
lag-windowed maximum cross-correlation.

Feature names look like ``C3-EEG_C4-EEG_Corr``: two channel tokens
(``<sub>-<MODALITY>``, or the bare modality for single-channel modalities)
and a kind suffix. Vectors list every Corr feature, then every CrossCorr,
then every Cov, each in canonical pair order.
"""
from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import (
    DegeneratePair,
    EmptyInput,
    InfeasibleCombination,
    LagTooLarge,
    LengthMismatch,
    MissingChannel,
    TooShort,
)
from .ingest.records import MODALITY_ORDER, ChannelMeta, Modality
from .segmentation import FatigueClass, Segment

VARIANCE_EPS = 1e-12

# channels per modality in the nine-channel layout (ECG, EOG-H/V, EMG, 5 EEG)
DEFAULT_CHANNEL_COUNTS = {Modality.ECG: 1, Modality.EOG: 2, Modality.EMG: 1, Modality.EEG: 5}


class Kind(str, enum.Enum):
    CORR = "Corr"
    CROSS_CORR = "CrossCorr"
    COV = "Cov"


KIND_ORDER = (Kind.CORR, Kind.CROSS_CORR, Kind.COV)
GROUP_NAMES = {Kind.CORR: "Correlation", Kind.CROSS_CORR: "Cross_correlation",
               Kind.COV: "Covariance"}


def _pair(x, y, min_len):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"sequences differ in shape: {x.shape} vs {y.shape}")
    if x.size < min_len:
        if min_len == 1:
            raise EmptyInput("empty sequences")
        raise TooShort(f"need at least {min_len} samples, got {x.size}")
    return x, y


def pearson(x, y) -> float:
    """Pearson's r; 0.0 with a DegeneratePair warning if either side is constant."""
    x, y = _pair(x, y, 2)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = np.dot(dx, dx)
    syy = np.dot(dy, dy)
    if sxx / x.size < VARIANCE_EPS or syy / y.size < VARIANCE_EPS:
        warnings.warn("zero-variance sequence in pearson()", DegeneratePair, stacklevel=2)
        return 0.0
    return float(np.dot(dx, dy) / (np.sqrt(sxx) * np.sqrt(syy)))


def covariance(x, y) -> float:
    """Population (1/N) covariance."""
    x, y = _pair(x, y, 1)
    return float(np.dot(x - x.mean(), y - y.mean()) / x.size)


def lag_samples(rate: float, max_lag_ms: float) -> int:
    return int(round(rate * max_lag_ms / 1000.0))


def _standardize(x):
    d = x - x.mean(axis=-1, keepdims=True)
    sd = np.sqrt(np.mean(d * d, axis=-1, keepdims=True))
    ok = sd[..., 0] ** 2 >= VARIANCE_EPS
    return np.where(sd > 0, d / np.where(sd > 0, sd, 1.0), 0.0), ok


def _lag_profile(a_fft, b_fft, nfft, n, L):
    """Overlap-normalized ``sum_i a_i b_{i+tau} / (n - |tau|)`` for tau in [-L, L]."""
    full = sfft.irfft(np.conj(a_fft) * b_fft, n=nfft, axis=-1)
    lags = np.arange(-L, L + 1)
    sums = full[..., lags % nfft]
    return sums / (n - np.abs(lags)), lags


def _search_order(L):
    # 0, -1, +1, -2, +2, ...: a strict '>' scan then prefers small |tau|, then negative
    order = [L]
    for k in range(1, L + 1):
        order += [L - k, L + k]
    return np.asarray(order)


def _best_lag(profile, L):
    order = _search_order(L)
    vals = profile[..., order]
    pos = np.argmax(vals, axis=-1)
    best = np.take_along_axis(vals, pos[..., None], axis=-1)[..., 0]
    return best, order[pos] - L


def max_cross_corr(x, y, rate: float, max_lag_ms: float = 500.0) -> tuple[float, int]:
    """Maximum normalized cross-correlation over lags within ``±max_lag_ms``.

    Both inputs are mean-removed and scaled by their full-window population
    standard deviations; each lag's product sum is divided by the overlap
    length ``N - |tau|``. Positive lag means ``y`` trails ``x``. Returns
    ``(value, lag_in_samples)``.
    """
    x, y = _pair(x, y, 2)
    n = x.size
    L = lag_samples(rate, max_lag_ms)
    if L >= n:
        raise LagTooLarge(f"max lag of {L} samples is not below the length {n}")
    z, ok = _standardize(np.stack([x, y]))
    if not ok.all():
        warnings.warn("zero-variance sequence in max_cross_corr()", DegeneratePair, stacklevel=2)
        return 0.0, 0
    nfft = sfft.next_fast_len(n + L, real=True)
    F = sfft.rfft(z, n=nfft, axis=-1)
    profile, _ = _lag_profile(F[0], F[1], nfft, n, L)
    best, lag = _best_lag(profile, L)
    return float(best), int(lag)


# --- modality combinations --------------------------------------------------

@dataclass(frozen=True)
class ModalityCombination:
    modalities: tuple[Modality, ...]
    feasible: bool = True

    def __post_init__(self):
        mods = tuple(sorted({Modality(m) for m in self.modalities}, key=lambda m: m.rank))
        if not mods:
            raise ValueError("a modality combination needs at least one modality")
        object.__setattr__(self, "modalities", mods)

    @property
    def name(self) -> str:
        return "|".join(m.value for m in self.modalities)

    @classmethod
    def parse(cls, name: str) -> "ModalityCombination":
        return cls(tuple(Modality(p.strip().upper()) for p in name.split("|")))

    def __str__(self):
        return self.name


def enumerate_modality_combinations(available, channel_counts=None) -> list[ModalityCombination]:
    """Every non-empty subset of ``available`` in canonical order.

    Subsets with fewer than two channels in total are returned with
    ``feasible=False``. Order: by size, then lexicographically by canonical
    modality rank.
    """
    mods = sorted({Modality(m) for m in available}, key=lambda m: m.rank)
    if not mods:
        raise ValueError("no modalities available")
    counts = DEFAULT_CHANNEL_COUNTS if channel_counts is None else {
        Modality(k): v for k, v in channel_counts.items()}
    out = []
    for size in range(1, len(mods) + 1):
        for subset in itertools.combinations(mods, size):
            n_ch = sum(counts.get(m, 0) for m in subset)
            out.append(ModalityCombination(subset, feasible=n_ch >= 2))
    return out


ALL_MODALITIES = ModalityCombination(MODALITY_ORDER)


# --- naming -----------------------------------------------------------------

def channel_token(meta: ChannelMeta) -> str:
    return meta.token


def feature_name(a: ChannelMeta, b: ChannelMeta, kind: Kind) -> str:
    return f"{a.token}_{b.token}_{Kind(kind).value}"


def _parse_token(token: str) -> tuple[Modality, str]:
    parts = token.split("-")
    modalities = {m.value for m in Modality}
    if len(parts) == 1 and parts[0].upper() in modalities:
        return Modality(parts[0].upper()), ""
    if len(parts) == 2:
        first, second = parts
        if second.upper() in modalities:
            return Modality(second.upper()), first
        if first.upper() in modalities:
            return Modality(first.upper()), second
    # paper-style doubled separator, e.g. "C3--EEG"
    if len(parts) == 3 and parts[1] == "":
        return _parse_token(f"{parts[0]}-{parts[2]}")
    raise ValueError(f"cannot parse channel token {token!r}")


def parse_feature_name(name: str) -> tuple[tuple[Modality, str], tuple[Modality, str], Kind]:
    """Inverse of feature_name: ``((mod_a, sub_a), (mod_b, sub_b), kind)``."""
    parts = name.split("_")
    if len(parts) != 3:
        raise ValueError(f"feature name {name!r} must have three '_'-separated parts")
    return _parse_token(parts[0]), _parse_token(parts[1]), Kind(parts[2])


# --- extraction -------------------------------------------------------------

@dataclass(frozen=True)
class PairDescriptors:
    """All three descriptors for every canonical channel pair of one segment."""

    metas: tuple[ChannelMeta, ...]
    corr: np.ndarray        # (n_pairs,)
    cross_corr: np.ndarray  # (n_pairs,)
    lag: np.ndarray         # (n_pairs,) samples
    cov: np.ndarray         # (n_pairs,)
    degenerate: np.ndarray  # (n_pairs,) bool
    pairs: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def index(self):
        return {(self.metas[i].key, self.metas[j].key): p for p, (i, j) in enumerate(self.pairs)}


def canonical_channels(metas) -> list[int]:
    return sorted(range(len(metas)), key=lambda i: metas[i].sort_key)


def segment_descriptors(segment: Segment, lag_ms: float = 500.0) -> PairDescriptors:
    """Compute Corr, CrossCorr (with lag) and Cov for all channel pairs at once."""
    order = canonical_channels([c.meta for c in segment.channels])
    metas = tuple(segment.channels[i].meta for i in order)
    X = np.stack([segment.channels[i].samples for i in order]).astype(np.float64)
    k, n = X.shape
    if n < 2:
        raise TooShort("segments need at least two samples per channel")
    L = lag_samples(segment.rate, lag_ms)
    if L >= n:
        raise LagTooLarge(f"max lag of {L} samples is not below the window length {n}")
    pairs = tuple(itertools.combinations(range(k), 2))
    ia = np.array([p[0] for p in pairs], dtype=np.intp)
    ib = np.array([p[1] for p in pairs], dtype=np.intp)
    D = X - X.mean(axis=1, keepdims=True)
    ss = np.einsum("ij,ij->i", D, D)
    gram = D @ D.T
    ok = ss / n >= VARIANCE_EPS
    good = ok[ia] & ok[ib]
    cov = gram[ia, ib] / n
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(good, gram[ia, ib] / (np.sqrt(ss[ia]) * np.sqrt(ss[ib])), 0.0)
    Z, _ = _standardize(X)
    nfft = sfft.next_fast_len(n + L, real=True)
    F = sfft.rfft(Z, n=nfft, axis=-1)
    profile, _ = _lag_profile(F[ia], F[ib], nfft, n, L)
    xc, lag = _best_lag(profile, L)
    xc = np.where(good, xc, 0.0)
    lag = np.where(good, lag, 0)
    return PairDescriptors(metas, corr, xc, lag.astype(np.int64), cov, ~good, pairs)


@dataclass(frozen=True)
class FeatureVector:
    key: tuple[str, int]
    names: tuple[str, ...]
    values: np.ndarray
    label: FatigueClass
    lags: dict = field(default_factory=dict)
    degenerate_pairs: tuple[str, ...] = ()


def combination_channels(metas, combination: ModalityCombination) -> list[int]:
    wanted = set(combination.modalities)
    return [i for i, m in enumerate(metas) if m.modality in wanted]


def feature_names_for(metas, combination: ModalityCombination) -> list[str]:
    idx = combination_channels(metas, combination)
    pairs = list(itertools.combinations(idx, 2))
    return [feature_name(metas[i], metas[j], kind) for kind in KIND_ORDER for i, j in pairs]


def extract_features(segment: Segment, combination: ModalityCombination, lag_ms: float = 500.0,
                     descriptors: PairDescriptors | None = None) -> FeatureVector:
    """Feature vector of length ``3 * C(k, 2)`` for the combination's ``k`` channels."""
    if not combination.feasible:
        raise InfeasibleCombination(f"{combination.name} has fewer than two channels")
    present = {c.meta.modality for c in segment.channels}
    missing = [m.value for m in combination.modalities if m not in present]
    if missing:
        raise MissingChannel(f"segment {segment.key} has no {', '.join(missing)} channel")
    desc = descriptors or segment_descriptors(segment, lag_ms)
    idx = combination_channels(desc.metas, combination)
    if len(idx) < 2:
        raise InfeasibleCombination(f"{combination.name} has {len(idx)} channel(s) in this segment")
    lookup = {p: n for n, p in enumerate(desc.pairs)}
    sel = [lookup[(i, j)] for i, j in itertools.combinations(idx, 2)]
    values = np.concatenate([desc.corr[sel], desc.cross_corr[sel], desc.cov[sel]])
    names = tuple(feature_names_for(desc.metas, combination))
    n_pairs = len(sel)
    lags = {names[n_pairs + q]: int(desc.lag[s]) for q, s in enumerate(sel)}
    degenerate = tuple(names[q].rsplit("_", 1)[0] for q, s in enumerate(sel) if desc.degenerate[s])
    return FeatureVector(segment.key, names, values, segment.label, lags, degenerate)
