"""Embedding data model, file formats, validation, and synthetic data generation.

The canonical on-disk format is the little-endian binary container "EMB1":

    magic "EMB1" | u32 n | u32 d | u32 m | m x (u16 len, utf-8 name)
    | n x (u32 class index, d x f32)

Binary files round-trip bit-exactly; CSV is supported for interchange and
preserves values to 9 significant digits (enough to round-trip float32).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"EMB1"

# A feature vector is a 1-D float array; invariants (finite entries, length d)
# are enforced by the owning EmbeddingSet.
FeatureVector = np.ndarray


@dataclass(frozen=True)
class LabeledEmbedding:
    """One feature vector together with its class index."""

    features: FeatureVector
    class_id: int


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable collection of labeled d-dimensional feature vectors.

    `vectors` is an (n, d) float32 array, `labels` an (n,) int array of
    indices into `class_names`. Arrays are marked read-only so a set can be
    shared across episode workers without copying.
    """

    dim: int
    class_names: tuple[str, ...]
    vectors: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if vectors.ndim != 2 or vectors.shape[1] != self.dim:
            raise ValidationError(
                f"vectors must have shape (n, {self.dim}), got {vectors.shape}"
            )
        if labels.shape != (vectors.shape[0],):
            raise ValidationError(
                f"labels must have shape ({vectors.shape[0]},), got {labels.shape}"
            )
        if self.dim <= 0:
            raise ValidationError("dimension must be positive")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValidationError("class names must be pairwise distinct")
        if any(not name for name in self.class_names):
            raise ValidationError("class names must be non-empty")
        if not np.all(np.isfinite(vectors)):
            bad = int(np.argwhere(~np.isfinite(vectors).all(axis=1))[0, 0])
            raise ValidationError(f"record {bad}: non-finite coordinate")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            bad = int(np.argwhere((labels < 0) | (labels >= len(self.class_names)))[0, 0])
            raise ValidationError(
                f"record {bad}: class index {int(labels[bad])} out of range "
                f"({len(self.class_names)} classes)"
            )
        vectors.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def items(self) -> Iterator[LabeledEmbedding]:
        for i in range(len(self)):
            yield LabeledEmbedding(self.vectors[i], int(self.labels[i]))

    def class_indices(self, class_id: int) -> np.ndarray:
        """Ascending item indices belonging to one class."""
        return np.flatnonzero(self.labels == class_id)


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic Gaussian-blob dataset: class means drawn uniformly on the
    sphere of radius `center_radius`, items isotropic-normal with
    per-coordinate standard deviation `within_std`."""

    n_classes: int
    per_class: int
    dim: int
    center_radius: float
    within_std: float

    def __post_init__(self) -> None:
        if self.n_classes <= 0 or self.per_class <= 0 or self.dim <= 0:
            raise ValidationError("n_classes, per_class, dim must be positive")
        if self.center_radius <= 0 or self.within_std <= 0:
            raise ValidationError("center_radius and within_std must be positive")


@dataclass(frozen=True)
class SetDiagnostics:
    """Summary produced by validate_set; diagnostics, never a rejection."""

    n_items: int
    dim: int
    class_counts: dict[int, int]
    min_norm: float
    mean_norm: float
    max_norm: float
    duplicate_groups: tuple[tuple[int, ...], ...] = field(default_factory=tuple)

    @property
    def has_duplicates(self) -> bool:
        return bool(self.duplicate_groups)


def save_embeddings(emb_set: EmbeddingSet, path: str | Path, format: str = "binary") -> None:
    """Write a set to disk; binary mode round-trips bit-exactly."""
    path = Path(path)
    if format == "binary":
        _save_binary(emb_set, path)
    elif format == "csv":
        _save_csv(emb_set, path)
    else:
        raise ValueError(f"unknown format {format!r}")


def load_embeddings(path: str | Path, format: str = "binary") -> EmbeddingSet:
    """Read a set from disk; inverse of save_embeddings."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown format {format!r}")


def _save_binary(emb_set: EmbeddingSet, path: Path) -> None:
    n = len(emb_set)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", n, emb_set.dim, emb_set.n_classes))
        for name in emb_set.class_names:
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValidationError(f"class name too long ({len(raw)} bytes)")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
        for i in range(n):
            f.write(struct.pack("<I", int(emb_set.labels[i])))
            f.write(emb_set.vectors[i].astype("<f4", copy=False).tobytes())


def _read_exact(f, count: int, offset: int, what: str) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise FormatError(
            f"truncated file reading {what} at byte offset {offset}: "
            f"expected {count} bytes, got {len(data)}"
        )
    return data


def _load_binary(path: Path) -> EmbeddingSet:
    with open(path, "rb") as f:
        offset = 0
        magic = f.read(4)
        if magic != MAGIC:
            raise FormatError(
                f"bad magic at byte offset 0: expected {MAGIC!r}, got {magic!r}"
            )
        offset += 4
        header = _read_exact(f, 12, offset, "header")
        n, dim, m = struct.unpack("<III", header)
        offset += 12
        names = []
        for k in range(m):
            raw_len = _read_exact(f, 2, offset, f"class name {k} length")
            offset += 2
            (length,) = struct.unpack("<H", raw_len)
            raw = _read_exact(f, length, offset, f"class name {k}")
            offset += length
            names.append(raw.decode("utf-8"))
        if dim == 0:
            raise FormatError("zero dimension in header at byte offset 8")
        record_bytes = 4 + 4 * dim
        labels = np.empty(n, dtype=np.int64)
        vectors = np.empty((n, dim), dtype=np.float32)
        for i in range(n):
            raw = _read_exact(f, record_bytes, offset, f"record {i}")
            offset += record_bytes
            (class_id,) = struct.unpack_from("<I", raw, 0)
            if class_id >= m:
                raise ValidationError(
                    f"record {i}: class index {class_id} out of range ({m} classes)"
                )
            labels[i] = class_id
            vectors[i] = np.frombuffer(raw, dtype="<f4", count=dim, offset=4)
        trailing = f.read(1)
        if trailing:
            raise FormatError(
                f"unexpected trailing data at byte offset {offset}"
            )
    return EmbeddingSet(dim=int(dim), class_names=tuple(names), vectors=vectors, labels=labels)


def _save_csv(emb_set: EmbeddingSet, path: Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label"] + [f"f{i}" for i in range(emb_set.dim)])
        for i in range(len(emb_set)):
            name = emb_set.class_names[int(emb_set.labels[i])]
            writer.writerow([name] + [f"{v:.9g}" for v in emb_set.vectors[i]])


def _load_csv(path: Path) -> EmbeddingSet:
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV file: missing header row") from None
        if not header or header[0] != "label":
            raise FormatError(f"bad CSV header: expected first column 'label', got {header[:1]}")
        dim = len(header) - 1
        if dim <= 0:
            raise FormatError("bad CSV header: no feature columns")
        names: list[str] = []
        name_index: dict[str, int] = {}
        labels: list[int] = []
        rows: list[list[float]] = []
        for row_no, row in enumerate(reader):
            if not row:
                continue
            if len(row) != dim + 1:
                raise FormatError(
                    f"row {row_no}: expected {dim + 1} fields, got {len(row)}"
                )
            name = row[0]
            if name not in name_index:
                name_index[name] = len(names)
                names.append(name)
            labels.append(name_index[name])
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise FormatError(f"row {row_no}: {exc}") from None
    vectors = np.asarray(rows, dtype=np.float32).reshape(len(rows), dim)
    return EmbeddingSet(
        dim=dim,
        class_names=tuple(names),
        vectors=vectors,
        labels=np.asarray(labels, dtype=np.int64),
    )


def validate_set(emb_set: EmbeddingSet) -> SetDiagnostics:
    """Per-class counts, norm statistics, and exact-duplicate warnings."""
    counts = {c: 0 for c in range(emb_set.n_classes)}
    for label in emb_set.labels:
        counts[int(label)] += 1
    if len(emb_set):
        norms = np.linalg.norm(emb_set.vectors.astype(np.float64), axis=1)
        min_norm, mean_norm, max_norm = float(norms.min()), float(norms.mean()), float(norms.max())
    else:
        min_norm = mean_norm = max_norm = 0.0
    groups: dict[bytes, list[int]] = {}
    for i in range(len(emb_set)):
        groups.setdefault(emb_set.vectors[i].tobytes(), []).append(i)
    duplicates = tuple(
        tuple(idx) for idx in groups.values() if len(idx) > 1
    )
    return SetDiagnostics(
        n_items=len(emb_set),
        dim=emb_set.dim,
        class_counts=counts,
        min_norm=min_norm,
        mean_norm=mean_norm,
        max_norm=max_norm,
        duplicate_groups=duplicates,
    )


def generate_synthetic(spec: SynthSpec, seed: int) -> EmbeddingSet:
    """Deterministic synthetic set; pure function of (spec, seed)."""
    emb_set, _ = generate_synthetic_with_centers(spec, seed)
    return emb_set


def generate_synthetic_with_centers(spec: SynthSpec, seed: int) -> tuple[EmbeddingSet, np.ndarray]:
    """Like generate_synthetic but also returns the (n_classes, dim) class
    centers the items were drawn around, for oracle comparisons."""
    rng = np.random.default_rng(np.uint64(seed))
    directions = rng.standard_normal((spec.n_classes, spec.dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    # A zero draw is impossible in practice; guard anyway.
    norms[norms == 0] = 1.0
    centers = spec.center_radius * directions / norms
    vectors = np.empty((spec.n_classes * spec.per_class, spec.dim), dtype=np.float32)
    labels = np.empty(spec.n_classes * spec.per_class, dtype=np.int64)
    for c in range(spec.n_classes):
        block = centers[c] + spec.within_std * rng.standard_normal((spec.per_class, spec.dim))
        vectors[c * spec.per_class : (c + 1) * spec.per_class] = block.astype(np.float32)
        labels[c * spec.per_class : (c + 1) * spec.per_class] = c
    width = len(str(spec.n_classes - 1))
    names = tuple(f"class_{c:0{width}d}" for c in range(spec.n_classes))
    emb_set = EmbeddingSet(dim=spec.dim, class_names=names, vectors=vectors, labels=labels)
    return emb_set, centers
