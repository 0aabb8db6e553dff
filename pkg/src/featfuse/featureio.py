"""Feature-file format, dataset model, and the fixed train/test split.

The on-disk feature format is little-endian binary: an 8-byte magic, then
format version, row count N, and column count d as unsigned 64-bit integers,
a length-prefixed UTF-8 extractor name, a length-prefixed sample-id table,
the row-major float32 payload, and a trailing CRC-32 of the payload. The
full byte layout is documented in docs/formats.md.
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlignmentError,
    ChecksumError,
    DataError,
    DegenerateSplitError,
    MagicMismatchError,
    StructuralError,
    TruncatedFileError,
)

MAGIC = b"FEATFUS1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureMatrix:
    """N x d float32 feature matrix keyed by unique sample ids."""

    data: np.ndarray
    sample_ids: tuple[str, ...]
    extractor_name: str = ""

    def __post_init__(self):
        d = self.data
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise StructuralError(f"feature matrix must be N x d with N, d >= 1, got {d.shape}")
        if d.dtype != np.float32:
            raise StructuralError(f"feature matrix must be float32, got {d.dtype}")
        if not np.isfinite(d).all():
            raise StructuralError("feature matrix contains NaN or Inf")
        if len(self.sample_ids) != d.shape[0]:
            raise StructuralError(
                f"{len(self.sample_ids)} sample ids for {d.shape[0]} rows"
            )
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise StructuralError("sample ids must be unique")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LabelVector:
    """Integer class labels in [0, K) with their class names."""

    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        k = len(self.class_names)
        if k < 2:
            raise StructuralError("at least two classes are required")
        if len(set(self.class_names)) != k:
            raise StructuralError("class names must be unique")
        lab = self.labels
        if lab.ndim != 1:
            raise StructuralError("labels must be a vector")
        if lab.size and (lab.min() < 0 or lab.max() >= k):
            raise StructuralError(f"labels must lie in [0, {k})")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def take(self, indices: np.ndarray) -> "LabelVector":
        return LabelVector(labels=self.labels[indices], class_names=self.class_names)


def labels_from_names(names, class_names=None) -> LabelVector:
    """Map text labels to integer codes; class order is sorted unless given."""
    if class_names is None:
        class_names = tuple(sorted(set(names)))
    else:
        class_names = tuple(class_names)
        unknown = sorted(set(names) - set(class_names))
        if unknown:
            raise StructuralError(f"labels outside the declared classes: {unknown}")
    index = {c: i for i, c in enumerate(class_names)}
    return LabelVector(
        labels=np.asarray([index[n] for n in names], dtype=np.int64),
        class_names=class_names,
    )


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/test partition of [0, N)."""

    seed: int
    train_fraction: float
    train_indices: np.ndarray
    test_indices: np.ndarray

    def __post_init__(self):
        tr, te = set(self.train_indices.tolist()), set(self.test_indices.tolist())
        n = len(tr) + len(te)
        if tr & te or (tr | te) != set(range(n)):
            raise StructuralError("split indices must be disjoint and cover [0, N)")

    @property
    def n_samples(self) -> int:
        return self.train_indices.size + self.test_indices.size

    def fingerprint(self) -> str:
        """Stable digest used to assert two runs share one test split."""
        h = hashlib.sha256()
        h.update(f"{self.seed}:{self.train_fraction!r}:".encode())
        h.update(np.ascontiguousarray(self.train_indices, dtype=np.int64).tobytes())
        h.update(b"|")
        h.update(np.ascontiguousarray(self.test_indices, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def fixed_split(
    n: int,
    seed: int = 0,
    fraction: float = 0.7,
    labels: np.ndarray | None = None,
    stratify: bool = False,
) -> SplitSpec:
    """Seeded shuffle split with |train| = round(fraction * n), half away from zero.

    With stratify=True, per-class train counts are allocated by largest
    remainder so the total still equals round(fraction * n).
    """
    if n < 2:
        raise DegenerateSplitError(f"need at least 2 samples, got {n}")
    if not 0.0 < fraction < 1.0:
        raise DegenerateSplitError(f"fraction must lie in (0, 1), got {fraction}")
    n_train = _round_half_away(fraction * n)
    if n_train == 0 or n_train == n:
        raise DegenerateSplitError(
            f"fraction {fraction} of {n} samples leaves an empty train or test set"
        )
    rng = np.random.default_rng(seed)
    if not stratify:
        perm = rng.permutation(n)
        train, test = perm[:n_train], perm[n_train:]
    else:
        if labels is None:
            raise DegenerateSplitError("stratified split requires labels")
        labels = np.asarray(labels)
        classes = np.unique(labels)
        quotas = {c: fraction * int((labels == c).sum()) for c in classes}
        counts = {c: int(math.floor(q)) for c, q in quotas.items()}
        short = n_train - sum(counts.values())
        # Distribute the remainder by largest fractional part, class index as tie-break.
        by_remainder = sorted(classes, key=lambda c: (-(quotas[c] - counts[c]), c))
        for c in by_remainder[:short]:
            counts[c] += 1
        train_parts, test_parts = [], []
        for c in classes:
            idx = np.flatnonzero(labels == c)
            idx = idx[rng.permutation(idx.size)]
            train_parts.append(idx[: counts[c]])
            test_parts.append(idx[counts[c] :])
        train = np.concatenate(train_parts)
        test = np.concatenate(test_parts)
    return SplitSpec(
        seed=seed,
        train_fraction=fraction,
        train_indices=np.sort(train).astype(np.int64),
        test_indices=np.sort(test).astype(np.int64),
    )


# --- binary container -------------------------------------------------------

def _u64(value: int) -> bytes:
    return struct.pack("<Q", value)


def _u32(value: int) -> bytes:
    return struct.pack("<I", value)


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise TruncatedFileError(
                f"{self.path}: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.blob)}"
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def text(self) -> str:
        return self.take(self.u64()).decode("utf-8")

    def expect_end(self) -> None:
        if self.pos != len(self.blob):
            raise StructuralError(
                f"{self.path}: {len(self.blob) - self.pos} trailing bytes "
                "after the checksum"
            )


def write_features(m: FeatureMatrix, path) -> None:
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    parts = [MAGIC, _u64(FORMAT_VERSION), _u64(m.n_samples), _u64(m.n_features)]
    name = m.extractor_name.encode("utf-8")
    parts.append(_u64(len(name)))
    parts.append(name)
    for sid in m.sample_ids:
        b = sid.encode("utf-8")
        parts.append(_u64(len(b)))
        parts.append(b)
    parts.append(payload)
    parts.append(_u32(zlib.crc32(payload) & 0xFFFFFFFF))
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_features(path) -> FeatureMatrix:
    try:
        with open(path, "rb") as fh:
            r = _Reader(fh.read(), path)
    except OSError as exc:
        raise DataError(f"feature file not readable: {path} ({exc})") from exc
    magic = r.take(8)
    if magic != MAGIC:
        raise MagicMismatchError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u64()
    if version != FORMAT_VERSION:
        raise StructuralError(f"{path}: unsupported format version {version}")
    n, d = r.u64(), r.u64()
    extractor_name = r.text()
    sample_ids = tuple(r.text() for _ in range(n))
    payload = r.take(n * d * 4)
    crc = r.u32()
    r.expect_end()
    if crc != (zlib.crc32(payload) & 0xFFFFFFFF):
        raise ChecksumError(f"{path}: payload CRC-32 mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()
    return FeatureMatrix(data=data, sample_ids=sample_ids, extractor_name=extractor_name)


def load_features_csv(path, extractor_name: str = "csv") -> FeatureMatrix:
    """Read a hand-made fixture: header sample_id,f0,f1,... one row per sample."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "sample_id":
            raise StructuralError(f"{path}: first column must be sample_id")
        ids, rows = [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return FeatureMatrix(
        data=np.asarray(rows, dtype=np.float32),
        sample_ids=tuple(ids),
        extractor_name=extractor_name,
    )


def load_labels_csv(path, id_column: str = "sample_id", label_column: str = "label"):
    """Read (sample_id, label-name) pairs from CSV."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"labels file not readable: {path} ({exc})") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or id_column not in reader.fieldnames \
                or label_column not in reader.fieldnames:
            raise StructuralError(
                f"{path}: header must contain {id_column!r} and {label_column!r}"
            )
        ids, names = [], []
        for row in reader:
            ids.append(row[id_column])
            names.append(row[label_column])
    return tuple(ids), tuple(names)


def save_labels_csv(path, sample_ids, label_names,
                    id_column: str = "sample_id", label_column: str = "label") -> None:
    """Inverse of load_labels_csv."""
    if len(sample_ids) != len(label_names):
        raise AlignmentError(
            f"{len(sample_ids)} sample ids for {len(label_names)} labels"
        )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_column, label_column])
        writer.writerows(zip(sample_ids, label_names))


def align_to_ids(reference_ids, other_ids, what: str) -> np.ndarray:
    """Row order of other_ids matching reference_ids; mismatches are hard errors."""
    index = {}
    for i, sid in enumerate(other_ids):
        if sid in index:
            raise AlignmentError(f"duplicate sample id {sid!r} in {what}")
        index[sid] = i
    order = []
    for sid in reference_ids:
        if sid not in index:
            raise AlignmentError(f"sample id {sid!r} has no row in {what}")
        order.append(index.pop(sid))
    if index:
        extra = next(iter(index))
        raise AlignmentError(f"{what} has row for unknown sample id {extra!r}")
    return np.asarray(order, dtype=np.int64)
