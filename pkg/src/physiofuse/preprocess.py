"""Per-channel resampling, band-pass filtering and z-score normalization."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .errors import BandOutOfRange, ConstantChannel, EmptyInput, NonPositiveRate, TooShort
from .ingest.records import Channel, SignalRecord


@dataclass(frozen=True)
class FilterSpec:
    low_cut: float = 0.5
    high_cut: float = 45.0
    family: str = "butterworth"
    order: int = 4
    zero_phase: bool = True

    def __post_init__(self):
        if self.family.lower() != "butterworth":
            raise ValueError(f"unsupported filter family {self.family!r}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"filter order must be a positive integer, got {self.order}")
        if not 0 < self.low_cut < self.high_cut:
            raise BandOutOfRange(f"need 0 < low_cut < high_cut, got {self.low_cut}, {self.high_cut}")

    def check(self, rate: float) -> None:
        if not 0 < self.low_cut < self.high_cut < rate / 2:
            raise BandOutOfRange(
                f"need 0 < {self.low_cut} < {self.high_cut} < Nyquist ({rate / 2}) Hz")


def resample(samples, from_rate: float, to_rate: float) -> np.ndarray:
    """Linear-interpolation resampling onto ``k / to_rate``; the last sample is held."""
    x = np.asarray(samples, dtype=np.float64)
    if from_rate <= 0 or to_rate <= 0:
        raise NonPositiveRate(f"rates must be positive, got {from_rate} -> {to_rate}")
    if x.size < 2:
        raise EmptyInput("resampling needs at least two samples")
    if from_rate == to_rate:
        return x
    n_out = int(round(x.size * to_rate / from_rate))
    # positions on the source index grid; exact rationals keep ramps exact
    pos = np.arange(n_out) * (from_rate / to_rate)
    return np.interp(pos, np.arange(x.size), x)


def _sos(rate: float, spec: FilterSpec):
    spec.check(rate)
    return signal.butter(spec.order, [spec.low_cut, spec.high_cut], btype="bandpass",
                         fs=rate, output="sos")


def bandpass_filter(samples, rate: float, spec: FilterSpec = FilterSpec()) -> np.ndarray:
    """Butterworth band-pass.

    The zero-phase form applies the filter's squared magnitude response to
    the reflect-padded signal in the frequency domain, which equals
    forward-backward filtering on the periodic extension and is exactly
    linear and time-reversal symmetric. ``zero_phase=False`` runs a single
    causal pass.
    """
    x = np.asarray(samples, dtype=np.float64)
    sos = _sos(rate, spec)
    pad = 3 * spec.order
    if x.size <= pad:
        raise TooShort(f"need more than {pad} samples, got {x.size}")
    if not spec.zero_phase:
        return signal.sosfilt(sos, x)
    padded = np.pad(x, pad, mode="reflect")
    n = padded.size
    freqs = sfft.rfftfreq(n, d=1.0 / rate)
    _, h = signal.sosfreqz(sos, worN=freqs, fs=rate)
    gain = np.abs(h) ** 2
    y = sfft.irfft(sfft.rfft(padded) * gain, n=n)
    return y[pad:pad + x.size]


def zscore(samples) -> np.ndarray:
    """Standardize with population statistics.

    A constant input returns zeros and emits a ConstantChannel warning.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise EmptyInput("z-score needs at least two samples")
    mu = x.mean()
    centered = x - mu
    sd = np.sqrt(np.mean(centered * centered))
    if sd == 0 or sd <= 1e-12 * max(1.0, abs(mu)):
        warnings.warn("constant channel normalized to zeros", ConstantChannel, stacklevel=2)
        return np.zeros_like(x)
    z = centered / sd
    # second pass removes the rounding residue of the first
    z -= z.mean()
    return z / np.sqrt(np.mean(z * z))


@dataclass(frozen=True)
class PreprocessResult:
    record: SignalRecord
    constant_channels: tuple[str, ...] = ()


def preprocess_record(record: SignalRecord, spec: FilterSpec = FilterSpec(),
                      target_rate: float | None = None) -> PreprocessResult:
    """Resample every channel to one rate, band-pass, then z-score.

    ``target_rate`` defaults to the highest channel rate. A channel
    downsampled by 2x or more is band-passed at its source rate first.
    """
    if not record.channels:
        raise EmptyInput("record has no channels")
    rate = float(target_rate or max(c.meta.sampling_rate for c in record.channels))
    out = []
    constant = []
    for ch in record.channels:
        x = ch.samples
        src = ch.meta.sampling_rate
        if src / rate >= 2:
            x = bandpass_filter(x, src, spec)
        x = resample(x, src, rate)
        x = bandpass_filter(x, rate, spec)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConstantChannel)
            x = zscore(x)
        if any(issubclass(w.category, ConstantChannel) for w in caught):
            constant.append(ch.meta.label)
        meta = type(ch.meta)(ch.meta.label, ch.meta.modality, ch.meta.sub_label, rate,
                             ch.meta.physical_unit)
        out.append(Channel(meta, x))
    return PreprocessResult(record.with_channels(out), tuple(constant))
