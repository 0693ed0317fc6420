"""In-memory recording types and the channel-label map."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import UnknownLabel, UnknownLabelWarning


class Modality(str, enum.Enum):
    ECG = "ECG"
    EOG = "EOG"
    EMG = "EMG"
    EEG = "EEG"

    @property
    def rank(self) -> int:
        return MODALITY_ORDER.index(self)


MODALITY_ORDER = (Modality.ECG, Modality.EOG, Modality.EMG, Modality.EEG)


@dataclass(frozen=True)
class ChannelMeta:
    label: str
    modality: Modality
    sub_label: str = ""
    sampling_rate: float = 512.0
    physical_unit: str = "uV"

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        if not (self.sampling_rate > 0 and math.isfinite(self.sampling_rate)):
            raise ValueError(f"sampling_rate must be positive, got {self.sampling_rate}")
        if "_" in self.sub_label:
            raise ValueError(f"sub_label may not contain '_': {self.sub_label!r}")

    @property
    def key(self) -> tuple[Modality, str]:
        return (self.modality, self.sub_label)

    @property
    def sort_key(self) -> tuple[int, str]:
        return (self.modality.rank, self.sub_label)

    @property
    def token(self) -> str:
        """Name fragment used in feature names, e.g. ``C3-EEG`` or ``ECG``."""
        if self.sub_label:
            return f"{self.sub_label}-{self.modality.value}"
        return self.modality.value


@dataclass(frozen=True)
class Channel:
    meta: ChannelMeta
    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError("channel samples must be one-dimensional")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.meta.sampling_rate


@dataclass(frozen=True)
class SignalRecord:
    """Synchronized multichannel recording with sparse KSS annotations."""

    channels: tuple[Channel, ...]
    session_id: str = "session"
    kss_annotations: tuple[tuple[float, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        chans = tuple(self.channels)
        keys = [c.meta.key for c in chans]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate (modality, sub_label) pairs in {keys}")
        ann = []
        for t, score in self.kss_annotations:
            if int(score) != score or not 1 <= int(score) <= 9:
                raise ValueError(f"KSS score must be an integer in [1, 9], got {score!r}")
            ann.append((float(t), int(score)))
        ann.sort(key=lambda a: a[0])
        if chans:
            span = min(c.duration for c in chans)
            trimmed = []
            for c in chans:
                n = int(math.floor(span * c.meta.sampling_rate + 1e-9))
                trimmed.append(c if n == len(c.samples) else Channel(c.meta, c.samples[:n]))
            chans = tuple(trimmed)
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "kss_annotations", tuple(ann))

    @property
    def duration(self) -> float:
        return min((c.duration for c in self.channels), default=0.0)

    def channel(self, modality, sub_label="") -> Channel:
        key = (Modality(modality), sub_label)
        for c in self.channels:
            if c.meta.key == key:
                return c
        raise KeyError(key)

    def with_channels(self, channels) -> "SignalRecord":
        return SignalRecord(tuple(channels), self.session_id, self.kss_annotations)

    def with_annotations(self, annotations) -> "SignalRecord":
        return SignalRecord(self.channels, self.session_id, tuple(annotations))


# DROZY-style labels; user tables are merged over this one.
DEFAULT_LABEL_MAP: dict[str, tuple[Modality, str]] = {
    "ECG": (Modality.ECG, ""),
    "EKG": (Modality.ECG, ""),
    "EMG": (Modality.EMG, ""),
    "EOG-H": (Modality.EOG, "H"),
    "EOG-V": (Modality.EOG, "V"),
    "HEOG": (Modality.EOG, "H"),
    "VEOG": (Modality.EOG, "V"),
    "C3": (Modality.EEG, "C3"),
    "C4": (Modality.EEG, "C4"),
    "CZ": (Modality.EEG, "Cz"),
    "FZ": (Modality.EEG, "Fz"),
    "PZ": (Modality.EEG, "Pz"),
}


def _normalize_label(label: str) -> str:
    return label.strip().upper().replace(" ", "")


def parse_label_spec(spec: str) -> tuple[Modality, str]:
    """``"EEG:C3"`` -> ``(Modality.EEG, "C3")``; ``"ECG"`` -> ``(Modality.ECG, "")``."""
    mod, _, sub = spec.partition(":")
    return Modality(mod.strip().upper()), sub.strip()


class LabelMap:
    """Maps raw recording labels to ``(modality, sub_label)``.

    Lookup is case-insensitive. A label such as ``C3-A1`` that is not found
    verbatim falls back to its part before the first ``-`` (reference
    electrode suffixes are common in EEG montages).
    """

    def __init__(self, table=None, strict=False):
        self.table = {_normalize_label(k): v for k, v in DEFAULT_LABEL_MAP.items()}
        for k, v in (table or {}).items():
            self.table[_normalize_label(k)] = parse_label_spec(v) if isinstance(v, str) else (
                Modality(v[0]), v[1])
        self.strict = strict

    @classmethod
    def from_yaml(cls, path, strict=False):
        import yaml

        with open(path, encoding="utf-8") as fh:
            table = yaml.safe_load(fh) or {}
        if not isinstance(table, dict):
            raise ValueError(f"{path}: label map must be a mapping of label -> 'MODALITY:sub'")
        return cls(table, strict=strict)

    def lookup(self, label: str):
        """Return ``(modality, sub_label)`` or None for an unknown label.

        Raises UnknownLabel instead of returning None in strict mode.
        """
        norm = _normalize_label(label)
        hit = self.table.get(norm)
        if hit is None and "-" in norm:
            hit = self.table.get(norm.split("-", 1)[0])
        if hit is None:
            if self.strict:
                raise UnknownLabel(f"channel label {label!r} is not in the label map")
            warnings.warn(f"skipping unmapped channel label {label!r}", UnknownLabelWarning,
                          stacklevel=2)
        return hit
