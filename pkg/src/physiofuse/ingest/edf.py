"""EDF(+) reading, plus the minimal writer used to build test fixtures.

Layout: a 256-byte ASCII main header, then ``ns`` signal headers stored
field-major (all labels, then all transducers, ...), then data records of
little-endian int16 samples, channel-major within each record. EDF+
annotation signals are skipped.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateCalibration, InvalidField, TruncatedHeader
from .records import Channel, ChannelMeta, LabelMap, SignalRecord

MAIN_HEADER_BYTES = 256
SIGNAL_HEADER_BYTES = 256
ANNOTATION_LABEL = "EDF Annotations"

# (name, width) of each main-header field in file order
_MAIN_FIELDS = (
    ("version", 8),
    ("patient_id", 80),
    ("recording_id", 80),
    ("start_date", 8),
    ("start_time", 8),
    ("header_bytes", 8),
    ("reserved", 44),
    ("num_records", 8),
    ("record_duration", 8),
    ("num_signals", 4),
)

_SIGNAL_FIELDS = (
    ("label", 16),
    ("transducer", 80),
    ("physical_dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefiltering", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
)


@dataclass(frozen=True)
class EdfSignalHeader:
    label: str
    transducer: str = ""
    physical_dimension: str = "uV"
    physical_min: float = -250.0
    physical_max: float = 250.0
    digital_min: int = -32768
    digital_max: int = 32767
    prefiltering: str = ""
    samples_per_record: int = 512
    reserved: str = ""

    @property
    def is_annotation(self) -> bool:
        return self.label.strip() == ANNOTATION_LABEL

    def to_physical(self, digital) -> np.ndarray:
        """Linear calibration; the digital extremes map exactly to the physical ones."""
        if self.digital_min == self.digital_max:
            raise DegenerateCalibration(f"signal {self.label!r}: digital_min == digital_max")
        d = np.asarray(digital, dtype=np.float64)
        span_p = self.physical_max - self.physical_min
        span_d = float(self.digital_max - self.digital_min)
        out = self.physical_min + (d - self.digital_min) * span_p / span_d
        out = np.where(d == self.digital_min, self.physical_min, out)
        return np.where(d == self.digital_max, self.physical_max, out)


@dataclass(frozen=True)
class EdfHeader:
    version: str = "0"
    patient_id: str = ""
    recording_id: str = ""
    start_datetime: dt.datetime = dt.datetime(2000, 1, 1)
    num_records: int = 0
    record_duration: float = 1.0
    reserved: str = ""
    signals: tuple[EdfSignalHeader, ...] = field(default_factory=tuple)

    @property
    def num_signals(self) -> int:
        return len(self.signals)

    @property
    def header_bytes(self) -> int:
        return MAIN_HEADER_BYTES + SIGNAL_HEADER_BYTES * self.num_signals

    def sampling_rate(self, index: int) -> float:
        return self.signals[index].samples_per_record / self.record_duration


def _ascii(raw: bytes, name: str) -> str:
    try:
        return raw.decode("ascii").rstrip(" \x00")
    except UnicodeDecodeError as exc:
        raise InvalidField(f"{name}: non-ASCII bytes") from exc


def _number(text: str, name: str, kind=float):
    try:
        if kind is int:
            return int(text.strip())
        return float(text.strip())
    except ValueError:
        raise InvalidField(f"{name}: expected a number, got {text!r}") from None


def _parse_datetime(date_s: str, time_s: str) -> dt.datetime:
    try:
        dd, mm, yy = (int(p) for p in date_s.split("."))
        hh, mi, ss = (int(p) for p in time_s.split("."))
    except ValueError:
        raise InvalidField(f"start date/time: cannot parse {date_s!r} {time_s!r}") from None
    year = 1900 + yy if yy >= 85 else 2000 + yy
    try:
        return dt.datetime(year, mm, dd, hh, mi, ss)
    except ValueError as exc:
        raise InvalidField(f"start date/time: {exc}") from None


def parse_header(data: bytes) -> EdfHeader:
    """Decode the main and signal headers at the start of ``data``."""
    if len(data) < MAIN_HEADER_BYTES:
        raise TruncatedHeader(f"need {MAIN_HEADER_BYTES} header bytes, got {len(data)}")
    raw = {}
    pos = 0
    for name, width in _MAIN_FIELDS:
        raw[name] = _ascii(data[pos:pos + width], name)
        pos += width
    ns = _number(raw["num_signals"], "num_signals", int)
    if ns < 1:
        raise InvalidField(f"num_signals must be >= 1, got {ns}")
    declared = _number(raw["header_bytes"], "header_bytes", int)
    needed = MAIN_HEADER_BYTES + SIGNAL_HEADER_BYTES * ns
    if len(data) < max(needed, declared):
        raise TruncatedHeader(f"need {max(needed, declared)} header bytes, got {len(data)}")
    columns = {}
    for name, width in _SIGNAL_FIELDS:
        columns[name] = [_ascii(data[pos + i * width:pos + (i + 1) * width], f"{name}[{i}]")
                         for i in range(ns)]
        pos += width * ns
    signals = []
    for i in range(ns):
        sig = EdfSignalHeader(
            label=columns["label"][i],
            transducer=columns["transducer"][i],
            physical_dimension=columns["physical_dimension"][i],
            physical_min=_number(columns["physical_min"][i], f"physical_min[{i}]"),
            physical_max=_number(columns["physical_max"][i], f"physical_max[{i}]"),
            digital_min=_number(columns["digital_min"][i], f"digital_min[{i}]", int),
            digital_max=_number(columns["digital_max"][i], f"digital_max[{i}]", int),
            prefiltering=columns["prefiltering"][i],
            samples_per_record=_number(columns["samples_per_record"][i],
                                       f"samples_per_record[{i}]", int),
            reserved=columns["reserved"][i],
        )
        if sig.digital_min == sig.digital_max and not sig.is_annotation:
            raise DegenerateCalibration(f"signal {sig.label!r}: digital_min == digital_max")
        if sig.samples_per_record < 1:
            raise InvalidField(f"samples_per_record[{i}] must be >= 1")
        signals.append(sig)
    duration = _number(raw["record_duration"], "record_duration")
    if not duration > 0:
        raise InvalidField(f"record_duration must be > 0, got {duration}")
    num_records = _number(raw["num_records"], "num_records", int)
    if num_records < -1:
        raise InvalidField(f"num_records must be >= 0 (or -1 while recording), got {num_records}")
    return EdfHeader(
        version=raw["version"],
        patient_id=raw["patient_id"],
        recording_id=raw["recording_id"],
        start_datetime=_parse_datetime(raw["start_date"], raw["start_time"]),
        num_records=num_records,
        record_duration=duration,
        reserved=raw["reserved"],
        signals=tuple(signals),
    )


def read_edf(data: bytes) -> tuple[EdfHeader, list[np.ndarray]]:
    """Header plus the raw int16 samples of every signal (annotations included).

    A trailing partial data record is dropped; ``num_records == -1`` is
    resolved from the data length.
    """
    header = parse_header(data)
    spr = np.array([s.samples_per_record for s in header.signals])
    record_len = int(spr.sum())
    body = memoryview(data)[header.header_bytes:]
    available = len(body) // (2 * record_len)
    n_rec = available if header.num_records < 0 else min(header.num_records, available)
    samples = np.frombuffer(body[:n_rec * record_len * 2], dtype="<i2").reshape(n_rec, record_len)
    bounds = np.concatenate([[0], np.cumsum(spr)])
    digital = [samples[:, bounds[i]:bounds[i + 1]].reshape(-1).copy()
               for i in range(header.num_signals)]
    if n_rec != header.num_records:
        header = EdfHeader(header.version, header.patient_id, header.recording_id,
                           header.start_datetime, n_rec, header.record_duration,
                           header.reserved, header.signals)
    return header, digital


def parse_edf(data: bytes, label_map: LabelMap | None = None, session_id: str = "session",
              kss_annotations=()) -> SignalRecord:
    """Parse EDF bytes into a calibrated SignalRecord.

    Channels whose labels are not in ``label_map`` are skipped with a warning,
    or raise UnknownLabel when the map is strict.
    """
    label_map = label_map or LabelMap()
    header, digital = read_edf(data)
    channels = []
    for sig, dig in zip(header.signals, digital):
        if sig.is_annotation:
            continue
        hit = label_map.lookup(sig.label)
        if hit is None:
            continue
        modality, sub = hit
        meta = ChannelMeta(
            label=sig.label,
            modality=modality,
            sub_label=sub,
            sampling_rate=sig.samples_per_record / header.record_duration,
            physical_unit=sig.physical_dimension,
        )
        channels.append(Channel(meta, sig.to_physical(dig)))
    return SignalRecord(tuple(channels), session_id, tuple(kss_annotations))


def _field(value, width: int, name: str) -> bytes:
    text = value if isinstance(value, str) else _format_number(value)
    raw = text.encode("ascii")
    if len(raw) > width:
        raise InvalidField(f"{name}: {text!r} does not fit in {width} bytes")
    return raw.ljust(width, b" ")


def _format_number(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer():
        return str(int(x))
    for digits in range(8, 0, -1):
        text = f"{x:.{digits}g}"
        if len(text) <= 8:
            return text
    raise InvalidField(f"{x!r} cannot be written in 8 characters")


def write_edf(header: EdfHeader, digital) -> bytes:
    """Serialize ``header`` and per-signal int16 samples to EDF bytes.

    Fixture writer only: every signal must hold ``num_records *
    samples_per_record`` samples.
    """
    start = header.start_datetime
    main = b"".join([
        _field(header.version, 8, "version"),
        _field(header.patient_id, 80, "patient_id"),
        _field(header.recording_id, 80, "recording_id"),
        _field(start.strftime("%d.%m.%y"), 8, "start_date"),
        _field(start.strftime("%H.%M.%S"), 8, "start_time"),
        _field(header.header_bytes, 8, "header_bytes"),
        _field(header.reserved, 44, "reserved"),
        _field(header.num_records, 8, "num_records"),
        _field(header.record_duration, 8, "record_duration"),
        _field(header.num_signals, 4, "num_signals"),
    ])
    sig_block = b"".join(
        b"".join(_field(getattr(s, name), width, f"{name}[{i}]")
                 for i, s in enumerate(header.signals))
        for name, width in _SIGNAL_FIELDS
    )
    arrays = []
    for s, d in zip(header.signals, digital):
        d = np.asarray(d)
        if d.size != header.num_records * s.samples_per_record:
            raise ValueError(f"signal {s.label!r}: expected "
                             f"{header.num_records * s.samples_per_record} samples, got {d.size}")
        if d.size and (d.min() < -32768 or d.max() > 32767):
            raise ValueError(f"signal {s.label!r}: samples outside int16 range")
        arrays.append(d.astype("<i2").reshape(header.num_records, s.samples_per_record))
    body = np.concatenate(arrays, axis=1).tobytes() if arrays else b""
    return main + sig_block + body
