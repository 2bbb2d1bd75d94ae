"""Decode snapshot files into SurveillanceRecords, streaming.

Snapshots are semicolon-delimited CSV with a header row, ISO-8859-2 bytes by
default (overridable), quoted fields allowed. Malformed rows are counted and
quarantined, never silently dropped: for every file,
``rows == records emitted + malformed``.
"""

from __future__ import annotations

import codecs
import csv
import datetime as dt
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from . import schema
from .errors import ConfigurationError, IngestError

# Large free-text fields must not trip the csv module's default limit.
csv.field_size_limit(16 * 1024 * 1024)

_SUPPORTED_ENCODINGS = {"iso8859-2", "iso8859-1", "utf-8", "cp1252"}

#: Quarantine sample cap kept in stats (the sidecar file holds everything).
_SAMPLE_LIMIT = 20


def _normalize_encoding(name: str) -> str:
    try:
        normalized = codecs.lookup(name).name
    except LookupError:
        raise ConfigurationError(f"unknown text encoding: {name!r}") from None
    if normalized not in _SUPPORTED_ENCODINGS:
        raise ConfigurationError(
            f"unsupported snapshot encoding {name!r}; supported: "
            + ", ".join(sorted(_SUPPORTED_ENCODINGS))
        )
    return normalized


@dataclass(frozen=True)
class SnapshotSource:
    """One yearly snapshot file and its dialect."""

    path: str | Path
    year: int
    delimiter: str = ";"
    encoding: str = "ISO-8859-2"
    date_format: str = "dmy"  # "dmy" = day/month/4-digit-year, or "iso"

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ConfigurationError("delimiter must be a single character")
        if self.date_format not in ("dmy", "iso"):
            raise ConfigurationError(
                f"unsupported date format {self.date_format!r} (use 'dmy' or 'iso')"
            )
        _normalize_encoding(self.encoding)


@dataclass
class IngestStats:
    """Per-file accounting. ``rows`` counts data rows (header excluded)."""

    year: int | None = None
    path: str = ""
    rows: int = 0
    records: int = 0
    malformed: int = 0
    date_parse_warnings: int = 0
    missing: Counter = field(default_factory=Counter)
    absent_fields: tuple[str, ...] = ()
    malformed_samples: list[tuple[int, str]] = field(default_factory=list)

    def note_malformed(self, row_number: int, reason: str) -> None:
        self.malformed += 1
        if len(self.malformed_samples) < _SAMPLE_LIMIT:
            self.malformed_samples.append((row_number, reason))

    def merge(self, other: "IngestStats") -> None:
        self.rows += other.rows
        self.records += other.records
        self.malformed += other.malformed
        self.date_parse_warnings += other.date_parse_warnings
        self.missing.update(other.missing)
        for sample in other.malformed_samples:
            if len(self.malformed_samples) >= _SAMPLE_LIMIT:
                break
            self.malformed_samples.append(sample)

    def finalize_missing(self) -> None:
        """Fields absent from the header are missing on every record."""
        for name in self.absent_fields:
            self.missing[name] = self.records

    def as_dict(self) -> dict:
        return {
            "year": self.year,
            "path": self.path,
            "rows": self.rows,
            "records": self.records,
            "malformed": self.malformed,
            "date_parse_warnings": self.date_parse_warnings,
            "missing_by_field": {k: self.missing[k] for k in sorted(self.missing)},
            "absent_fields": list(self.absent_fields),
            "malformed_samples": [
                {"row": n, "reason": r} for n, r in self.malformed_samples
            ],
        }


def parse_onset_date(text: str | None, date_format: str = "dmy") -> dt.date | None:
    """Parse a symptom-onset date; None for missing or non-conforming text.

    The default layout is day/month/four-digit-year ("26/04/2021"); single
    digit day or month are accepted. Civil-calendar validity is enforced, so
    "31/02/2020" is rejected.
    """
    if not text:
        return None
    sep = "/" if date_format == "dmy" else "-"
    parts = text.split(sep)
    if len(parts) != 3:
        return None
    if date_format == "dmy":
        d, m, y = parts
    else:
        y, m, d = parts
    if len(y) != 4:
        return None
    try:
        return dt.date(int(y), int(m), int(d))
    except ValueError:
        return None


class HeaderMap:
    """Resolves a snapshot header: which columns carry modeled fields, which
    pass through as extras. Precomputes per-kind column lists so the row
    converter stays branch-light."""

    def __init__(
        self,
        header: list[str],
        date_format: str = "dmy",
        required: tuple[str, ...] = schema.REQUIRED_FIELDS,
    ):
        names = [h.strip() for h in header]
        self.column_count = len(names)
        self.date_format = date_format
        seen: dict[str, int] = {}
        self.extras: list[tuple[str, int]] = []
        for idx, name in enumerate(names):
            if name in schema.FIELD_BY_NAME:
                # first occurrence wins if a header repeats a modeled column
                seen.setdefault(name, idx)
            else:
                self.extras.append((name, idx))

        missing_required = [n for n in required if n not in seen]
        if missing_required:
            raise IngestError(
                "snapshot header is missing required column(s): "
                + ", ".join(missing_required)
            )

        self.absent_fields = tuple(
            n for n in schema.FIELD_NAMES if n not in seen
        )
        # (slot position in the record constructor, source column, field name)
        self.int_cols: list[tuple[int, int, str]] = []
        self.text_cols: list[tuple[int, int, str]] = []
        self.date_cols: list[tuple[int, int, str]] = []
        for pos, spec in enumerate(schema.FIELDS):
            idx = seen.get(spec.name)
            if idx is None:
                continue
            if spec.kind in (schema.INT_CODE, schema.INT):
                self.int_cols.append((pos, idx, spec.name))
            elif spec.kind == schema.DATE:
                self.date_cols.append((pos, idx, spec.name))
            else:
                self.text_cols.append((pos, idx, spec.name))

    def convert_row(
        self, row: list[str], stats: IngestStats
    ) -> tuple[schema.SurveillanceRecord | None, str | None]:
        """Convert one raw row. Returns (record, None) or (None, reason) for a
        malformed row. ``stats`` collects missing counts and date warnings."""
        if len(row) != self.column_count:
            return None, (
                f"column_count_mismatch expected={self.column_count} got={len(row)}"
            )
        values: list = [None] * _N_FIELDS
        missing = stats.missing
        for pos, idx, name in self.int_cols:
            v = row[idx].strip()
            if v:
                try:
                    values[pos] = int(v)
                except ValueError:
                    return None, f"invalid_integer {name}={v!r}"
            else:
                missing[name] += 1
        for pos, idx, name in self.text_cols:
            v = row[idx].strip()
            if v:
                values[pos] = v
            else:
                missing[name] += 1
        for pos, idx, name in self.date_cols:
            v = row[idx].strip()
            if v:
                parsed = parse_onset_date(v, self.date_format)
                if parsed is None:
                    stats.date_parse_warnings += 1
                else:
                    values[pos] = parsed
            else:
                missing[name] += 1
        record = schema.SurveillanceRecord(*values)
        if self.extras:
            record.extra_fields = {name: row[idx].strip() for name, idx in self.extras}
        return record, None


_N_FIELDS = len(schema.FIELDS)


def _open_text(source: SnapshotSource) -> io.TextIOBase:
    encoding = _normalize_encoding(source.encoding)
    if encoding == "utf-8":
        encoding = "utf-8-sig"  # tolerate a BOM
    try:
        return open(source.path, "r", encoding=encoding, newline="")
    except OSError as exc:
        raise IngestError(f"cannot read snapshot {source.path}: {exc}") from exc


def open_snapshot(
    source: SnapshotSource,
    required: tuple[str, ...] = schema.REQUIRED_FIELDS,
) -> tuple[HeaderMap, Iterator[list[str]], io.TextIOBase]:
    """Open a snapshot, validate the header, return the raw-row iterator."""
    handle = _open_text(source)
    reader = csv.reader(handle, delimiter=source.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        handle.close()
        raise IngestError(f"snapshot {source.path} is empty (no header row)")
    except (csv.Error, UnicodeDecodeError) as exc:
        handle.close()
        raise IngestError(f"cannot parse header of {source.path}: {exc}") from exc
    try:
        header_map = HeaderMap(header, source.date_format, required)
    except IngestError:
        handle.close()
        raise
    return header_map, reader, handle


def read_snapshot(
    source: SnapshotSource,
    stats: IngestStats | None = None,
    quarantine: Callable[[int, list[str], str], None] | None = None,
    required: tuple[str, ...] = schema.REQUIRED_FIELDS,
) -> Iterator[schema.SurveillanceRecord]:
    """Stream one snapshot as SurveillanceRecords.

    ``stats`` (mutated in place) collects row/malformed/missing accounting;
    ``quarantine(row_number, raw_row, reason)`` receives each malformed row.
    Header problems raise IngestError before any record is yielded; pass
    ``required=()`` to map arbitrary partial headers.
    """
    if stats is None:
        stats = IngestStats()
    stats.year = source.year
    stats.path = str(source.path)
    header_map, reader, handle = open_snapshot(source, required)
    stats.absent_fields = header_map.absent_fields

    def _records() -> Iterator[schema.SurveillanceRecord]:
        with handle:
            row_number = 0
            for row in reader:
                row_number += 1
                stats.rows += 1
                record, reason = header_map.convert_row(row, stats)
                if record is None:
                    stats.note_malformed(row_number, reason)
                    if quarantine is not None:
                        quarantine(row_number, row, reason)
                    continue
                stats.records += 1
                yield record
        stats.finalize_missing()

    return _records()


def read_chunks(
    source: SnapshotSource, chunk_size: int
) -> tuple[HeaderMap, Iterator[tuple[int, list[list[str]]]]]:
    """Chunked raw-row access for the parallel driver.

    Yields (first_row_number, rows) with 1-based data row numbers. Chunk
    boundaries depend only on ``chunk_size``, never on worker count, so any
    downstream merge in chunk order reproduces the sequential result.
    """
    header_map, reader, handle = open_snapshot(source)

    def _chunks() -> Iterator[tuple[int, list[list[str]]]]:
        with handle:
            start = 1
            while True:
                block: list[list[str]] = []
                for row in reader:
                    block.append(row)
                    if len(block) >= chunk_size:
                        break
                if not block:
                    return
                yield start, block
                start += len(block)

    return header_map, _chunks()


def merge_snapshots(
    *streams: Iterable[schema.SurveillanceRecord],
) -> Iterator[schema.SurveillanceRecord]:
    """Concatenate record streams preserving order (all of the first stream,
    then the next)."""
    for stream in streams:
        yield from stream


class QuarantineWriter:
    """Sidecar file for malformed rows: same dialect as the source plus a
    trailing reason column."""

    def __init__(self, path: str | Path, delimiter: str = ";", encoding: str = "ISO-8859-2"):
        self.path = Path(path)
        self._delimiter = delimiter
        self._encoding = _normalize_encoding(encoding)
        self._handle: io.TextIOBase | None = None
        self._writer = None

    def write(self, row_number: int, row: list[str], reason: str) -> None:
        if self._writer is None:
            self._handle = open(self.path, "w", encoding=self._encoding, newline="")
            self._writer = csv.writer(
                self._handle, delimiter=self._delimiter, lineterminator="\n"
            )
        self._writer.writerow(list(row) + [reason])

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "QuarantineWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
