"""CSV recordings and KSS sidecar files."""
from __future__ import annotations

import csv
import io

import numpy as np

from ..errors import EmptyFile, NonNumericCell, RaggedRows
from .records import Channel, ChannelMeta, SignalRecord


def _rows(text):
    stream = io.StringIO(text) if isinstance(text, str) else text
    for row in csv.reader(stream):
        if row and any(cell.strip() for cell in row):
            yield [cell.strip() for cell in row]


def read_csv_record(text, meta: list[ChannelMeta], session_id="session",
                    kss_annotations=()) -> SignalRecord:
    """Read a comma-separated recording whose header row names the channels.

    ``text`` is a string or an open text stream. Header labels must match
    ``meta`` labels in order; all channels share ``meta[0].sampling_rate``.
    """
    rows = _rows(text)
    try:
        header = next(rows)
    except StopIteration:
        raise EmptyFile("CSV recording has no header row") from None
    labels = [m.label for m in meta]
    if header != labels:
        raise ValueError(f"CSV header {header} does not match channel labels {labels}")
    rate = meta[0].sampling_rate
    if any(m.sampling_rate != rate for m in meta):
        raise ValueError("CSV recordings carry a single common sampling rate")
    values = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise RaggedRows(f"row {lineno} has {len(row)} columns, expected {len(header)}")
        parsed = []
        for col, cell in zip(header, row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise NonNumericCell(lineno, col, cell) from None
        values.append(parsed)
    if not values:
        raise EmptyFile("CSV recording has a header but no samples")
    data = np.asarray(values, dtype=np.float64)
    channels = tuple(Channel(m, data[:, i]) for i, m in enumerate(meta))
    return SignalRecord(channels, session_id, tuple(kss_annotations))


def read_kss_sidecar(text) -> list[tuple[float, int]]:
    """Parse ``time_seconds,kss`` rows; a non-numeric first row is a header."""
    out = []
    for lineno, row in enumerate(_rows(text), start=1):
        if len(row) != 2:
            raise RaggedRows(f"KSS sidecar row {lineno} has {len(row)} columns, expected 2")
        try:
            t = float(row[0])
            score = float(row[1])
        except ValueError:
            if lineno == 1:
                continue
            raise NonNumericCell(lineno, "time_seconds/kss", ",".join(row)) from None
        if not score.is_integer():
            raise ValueError(f"KSS sidecar row {lineno}: score {row[1]!r} is not an integer")
        out.append((t, int(score)))
    return out


def write_csv_record(record: SignalRecord, stream) -> None:
    """Write channels as CSV (17 significant digits); inverse of read_csv_record."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([c.meta.label for c in record.channels])
    data = np.column_stack([c.samples for c in record.channels])
    for row in data:
        writer.writerow([f"{v:.17g}" for v in row])


def write_kss_sidecar(annotations, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["time_seconds", "kss"])
    for t, score in annotations:
        writer.writerow([f"{t:.17g}", int(score)])
