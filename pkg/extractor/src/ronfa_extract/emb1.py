"""Writer for the little-endian EMB1 embedding container.

Layout: magic "EMB1" | u32 n | u32 d | u32 m | m x (u16 len, utf-8 name)
| n x (u32 class index, d x f32). Kept bit-exact so downstream tools can
round-trip the file.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"EMB1"


def write_emb1(
    path: str | Path,
    class_names: Sequence[str],
    labels: Sequence[int],
    vectors: np.ndarray,
) -> None:
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError(f"vectors must be 2-D, got shape {vectors.shape}")
    n, dim = vectors.shape
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} vectors")
    m = len(class_names)
    if any(not (0 <= int(c) < m) for c in labels):
        raise ValueError("label out of range of the class table")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", n, dim, m))
        for name in class_names:
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"class name too long ({len(raw)} bytes)")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
        for i in range(n):
            f.write(struct.pack("<I", int(labels[i])))
            f.write(vectors[i].tobytes())
