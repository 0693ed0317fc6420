"""Fixed non-overlapping windows with KSS-derived fatigue labels."""
from __future__ import annotations

import bisect
import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DroppedSegments, MixedRates, NoChannels, OutOfRangeKss
from .ingest.records import Channel, SignalRecord


class FatigueClass(enum.IntEnum):
    ALERT = 0
    NORMAL = 1
    FATIGUED = 2


CLASS_NAMES = ("Alert", "Normal", "Fatigued")


def kss_to_class(kss: int) -> FatigueClass:
    """KSS 1-3 -> Alert, 4-6 -> Normal, 7-9 -> Fatigued."""
    if int(kss) != kss or not 1 <= kss <= 9:
        raise OutOfRangeKss(f"KSS must be an integer in [1, 9], got {kss!r}")
    return FatigueClass((int(kss) - 1) // 3)


@dataclass(frozen=True)
class Segment:
    session_id: str
    window_index: int
    start_time: float
    channels: tuple[Channel, ...]
    label: FatigueClass

    @property
    def key(self) -> tuple[str, int]:
        return (self.session_id, self.window_index)

    @property
    def rate(self) -> float:
        return self.channels[0].meta.sampling_rate


@dataclass(frozen=True)
class Segmentation:
    segments: tuple[Segment, ...]
    dropped_unlabeled: int = 0
    dropped_artifact: int = 0

    def class_counts(self) -> dict[int, int]:
        counts = {int(c): 0 for c in FatigueClass}
        for s in self.segments:
            counts[int(s.label)] += 1
        return counts


def _label_for(times, scores, start):
    i = bisect.bisect_right(times, start + 1e-9) - 1
    return None if i < 0 else scores[i]


def segment_record(record: SignalRecord, window_seconds: float = 20.0,
                   amplitude_threshold: float | None = None) -> Segmentation:
    """Cut ``record`` into ``floor(duration / window_seconds)`` labeled windows.

    Each window takes the latest KSS annotation at or before its start;
    windows with no such annotation are dropped and counted. When
    ``amplitude_threshold`` is set, windows where any channel exceeds it in
    absolute value are also dropped (artifact-rejection hook, off by
    default).
    """
    if not record.channels:
        raise NoChannels("record has no channels")
    if not window_seconds > 0:
        raise ValueError(f"window_seconds must be > 0, got {window_seconds}")
    rates = {c.meta.sampling_rate for c in record.channels}
    if len(rates) != 1:
        raise MixedRates(f"channels disagree on sampling rate: {sorted(rates)}")
    rate = rates.pop()
    win = window_seconds * rate
    if abs(win - round(win)) > 1e-6:
        raise ValueError(f"window of {window_seconds} s is not a whole number of samples at {rate} Hz")
    win = int(round(win))
    n_samples = min(len(c.samples) for c in record.channels)
    n_windows = n_samples // win
    times = [t for t, _ in record.kss_annotations]
    scores = [s for _, s in record.kss_annotations]
    segments = []
    unlabeled = artifact = 0
    for k in range(n_windows):
        start = k * window_seconds
        kss = _label_for(times, scores, start)
        if kss is None:
            unlabeled += 1
            continue
        sl = slice(k * win, (k + 1) * win)
        chans = tuple(Channel(c.meta, c.samples[sl]) for c in record.channels)
        if amplitude_threshold is not None and any(
                np.max(np.abs(c.samples)) > amplitude_threshold for c in chans):
            artifact += 1
            continue
        segments.append(Segment(record.session_id, k, start, chans, kss_to_class(kss)))
    if unlabeled:
        warnings.warn(f"{record.session_id}: dropped {unlabeled} window(s) preceding the first "
                      f"KSS annotation", DroppedSegments, stacklevel=2)
    return Segmentation(tuple(segments), unlabeled, artifact)

