"""Element-wise ASCII-decimal encoding of multi-type metadata tables.

Every metadata value (numeric, categorical, or free text) is taken as its
verbatim text rendering, padded on the right with spaces to the width of the
longest value in its field, and mapped character-by-character to ASCII code
points. Missing values encode to runs of zeros. The result is a fixed-width
non-negative integer matrix that can be concatenated with image features.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    AlignmentError,
    DataError,
    EmptyInputError,
    EncodingError,
    StructuralError,
)

MISSING_CODE = 0
PAD_CODE = 32  # ' '


@dataclass(frozen=True)
class MetadataTable:
    """N records of F optional text fields, column order fixed by field_names."""

    field_names: tuple[str, ...]
    records: tuple[tuple[str | None, ...], ...]

    def __post_init__(self):
        names = self.field_names
        if len(set(names)) != len(names) or any(not n for n in names):
            raise StructuralError("field names must be unique and non-empty")
        for i, row in enumerate(self.records):
            if len(row) != len(names):
                raise StructuralError(
                    f"record {i} has {len(row)} entries, expected {len(names)}"
                )

    @property
    def n_records(self) -> int:
        return len(self.records)

    def select(self, names: list[str] | tuple[str, ...]) -> "MetadataTable":
        """Restrict to the given fields, in the given order."""
        missing = [n for n in names if n not in self.field_names]
        if missing:
            raise StructuralError(f"unknown metadata fields: {missing}")
        idx = [self.field_names.index(n) for n in names]
        return MetadataTable(
            field_names=tuple(names),
            records=tuple(tuple(row[j] for j in idx) for row in self.records),
        )


@dataclass(frozen=True)
class EncodedMetadata:
    """ASCII-decimal code matrix plus the (offset, width) layout of each field."""

    values: np.ndarray  # N x d', uint8, entries in [0, 127]
    field_spans: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise StructuralError("encoded values must be a 2-D matrix")
        offset = 0
        for off, width in self.field_spans:
            if off != offset or width < 1:
                raise StructuralError(
                    f"field span ({off}, {width}) breaks the contiguous layout"
                )
            offset += width
        if offset != v.shape[1]:
            raise StructuralError(
                f"field widths sum to {offset}, matrix has {v.shape[1]} columns"
            )
        if v.size and int(v.max()) > 127:
            raise StructuralError("encoded values must lie in [0, 127]")

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _is_missing(value: str | None) -> bool:
    # Empty strings count as missing: CSV sources cannot distinguish them.
    return value is None or value == ""


def _ascii_bytes(value: str, row: int, name: str) -> bytes:
    try:
        return value.encode("ascii")
    except UnicodeEncodeError:
        bad = next(c for c in value if ord(c) > 127)
        raise EncodingError(
            f"row {row}, field {name!r}: non-ASCII character {bad!r} "
            f"(U+{ord(bad):04X})"
        ) from None


def field_widths(table: MetadataTable) -> tuple[int, ...]:
    """Byte length of the longest present value per field, minimum 1."""
    widths = []
    for f, name in enumerate(table.field_names):
        w = 1
        for i, row in enumerate(table.records):
            v = row[f]
            if not _is_missing(v):
                w = max(w, len(_ascii_bytes(v, i, name)))
        widths.append(w)
    return tuple(widths)


def _spans(widths: tuple[int, ...]) -> tuple[tuple[int, int], ...]:
    spans, offset = [], 0
    for w in widths:
        spans.append((offset, w))
        offset += w
    return tuple(spans)


def encode_with_widths(table: MetadataTable, widths: tuple[int, ...]) -> EncodedMetadata:
    """Encode against a fixed layout (widths learned elsewhere)."""
    if table.n_records == 0:
        raise EmptyInputError("cannot encode an empty metadata table")
    spans = _spans(widths)
    out = np.zeros((table.n_records, sum(widths)), dtype=np.uint8)
    for i, row in enumerate(table.records):
        for (off, w), name, v in zip(spans, table.field_names, row):
            if _is_missing(v):
                continue  # stays a zero run
            b = _ascii_bytes(v, i, name)
            if len(b) > w:
                raise EncodingError(
                    f"row {i}, field {name!r}: value {v!r} exceeds the "
                    f"field width {w}"
                )
            padded = b + b" " * (w - len(b))
            out[i, off : off + w] = np.frombuffer(padded, dtype=np.uint8)
    return EncodedMetadata(values=out, field_spans=spans)


def encode_table(table: MetadataTable) -> EncodedMetadata:
    """ASCII-decimal encode a whole table, widths taken from the table itself.

    Present values are right-padded with spaces (code 32) to the width of
    the longest value in their field, then mapped character-by-character to
    ASCII codes. Missing values become zero runs of the field width.
    """
    if table.n_records == 0:
        raise EmptyInputError("cannot encode an empty metadata table")
    return encode_with_widths(table, field_widths(table))


def decode_table(enc: EncodedMetadata, field_names) -> MetadataTable:
    """Inverse of encode_table up to trailing-space padding.

    All-zero spans decode to missing; other spans decode to their characters
    with trailing spaces stripped.
    """
    names = tuple(field_names)
    if len(names) != len(enc.field_spans):
        raise StructuralError(
            f"{len(names)} field names for {len(enc.field_spans)} spans"
        )
    records = []
    for row in enc.values:
        rec = []
        for off, w in enc.field_spans:
            codes = row[off : off + w]
            if not codes.any():
                rec.append(None)
            else:
                rec.append(bytes(codes.tolist()).decode("ascii").rstrip(" "))
        records.append(tuple(rec))
    return MetadataTable(field_names=names, records=tuple(records))


def load_metadata_csv(path, id_column: str = "sample_id") -> tuple[tuple[str, ...], MetadataTable]:
    """Read a UTF-8 CSV with a header row; empty cells become missing.

    Returns (sample_ids, table) with the id column removed from the table.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"metadata file not readable: {path} ({exc})") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: no header row") from None
        rows = [row for row in reader if row]
    if id_column not in header:
        raise StructuralError(f"{path}: no {id_column!r} column in header")
    id_idx = header.index(id_column)
    ids = []
    records = []
    for row in rows:
        if len(row) != len(header):
            raise StructuralError(
                f"{path}: row with {len(row)} cells, header has {len(header)}"
            )
        ids.append(row[id_idx])
        records.append(
            tuple(cell if cell != "" else None
                  for j, cell in enumerate(row) if j != id_idx)
        )
    names = tuple(n for j, n in enumerate(header) if j != id_idx)
    return tuple(ids), MetadataTable(field_names=names, records=tuple(records))


def save_metadata_csv(path, sample_ids, table: MetadataTable,
                      id_column: str = "sample_id") -> None:
    """Inverse of load_metadata_csv; missing values become empty cells."""
    if len(sample_ids) != len(table.records):
        raise AlignmentError(
            f"{len(sample_ids)} sample ids for {len(table.records)} metadata rows"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_column, *table.field_names])
        for sid, record in zip(sample_ids, table.records):
            writer.writerow([sid, *(("" if v is None else v) for v in record)])


class AsciiDecimalEncoder(BaseEstimator, TransformerMixin):
    """Fixed-width ASCII-decimal transformer over metadata tables.

    fit() learns the per-field widths from a table (normally the full dataset,
    so train and test share one layout); transform() encodes any table with
    the same fields against that layout.
    """

    def __init__(self):
        pass

    @staticmethod
    def _as_table(X) -> MetadataTable:
        if isinstance(X, MetadataTable):
            return X
        rows = [tuple(v if v is not None else None for v in row) for row in X]
        width = len(rows[0]) if rows else 0
        return MetadataTable(
            field_names=tuple(f"field_{j}" for j in range(width)),
            records=tuple(rows),
        )

    def fit(self, X, y=None):
        table = self._as_table(X)
        if table.n_records == 0:
            raise EmptyInputError("cannot fit on an empty metadata table")
        self.field_names_ = table.field_names
        self.widths_ = field_widths(table)
        self.field_spans_ = _spans(self.widths_)
        return self

    def transform(self, X) -> np.ndarray:
        table = self._as_table(X)
        if table.field_names != self.field_names_:
            raise StructuralError(
                f"fields {table.field_names} do not match fitted fields "
                f"{self.field_names_}"
            )
        return encode_with_widths(table, self.widths_).values

    def inverse_transform(self, values: np.ndarray) -> MetadataTable:
        enc = EncodedMetadata(
            values=np.asarray(values, dtype=np.uint8),
            field_spans=self.field_spans_,
        )
        return decode_table(enc, self.field_names_)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(
            [
                f"{name}[{k}]"
                for name, w in zip(self.field_names_, self.widths_)
                for k in range(w)
            ],
            dtype=object,
        )
