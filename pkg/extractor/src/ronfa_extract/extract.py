"""Folder-dataset extraction: one subdirectory per class, images inside.

The class table is the lexicographically sorted list of subdirectory names,
independent of filesystem enumeration order. Undecodable images are skipped
with a warning; a class with zero usable images aborts the run.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .emb1 import write_emb1
from .encoders import build_encoder


@dataclass(frozen=True)
class ExtractSpec:
    images_root: Path
    encoder_id: str = "vit_b_16"
    image_size: int = 224
    batch_size: int = 32
    output_path: Path = Path("embeddings.emb")

    def __post_init__(self) -> None:
        object.__setattr__(self, "images_root", Path(self.images_root))
        object.__setattr__(self, "output_path", Path(self.output_path))
        if self.image_size < 1:
            raise ValueError("image_size must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True)
class ExtractResult:
    output_path: Path
    meta_path: Path
    dim: int
    n_images: int
    n_skipped: int
    class_names: tuple[str, ...]
    per_class_counts: dict[str, int] = field(default_factory=dict)


def _scan_classes(root: Path) -> list[tuple[str, list[Path]]]:
    if not root.is_dir():
        raise FileNotFoundError(f"images root {root} is not a directory")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise ValueError(f"images root {root} has no class subdirectories")
    return [
        (name, sorted(p for p in (root / name).iterdir() if p.is_file()))
        for name in classes
    ]


def _load_image(path: Path) -> Image.Image | None:
    try:
        with Image.open(path) as img:
            img.load()
            return img.convert("RGB")
    except (UnidentifiedImageError, OSError):
        return None


def extract_embeddings(spec: ExtractSpec) -> ExtractResult:
    """Encode every decodable image and write an EMB1 file plus a sidecar
    "<output>.meta.json" describing provenance."""
    layout = _scan_classes(spec.images_root)
    class_names = tuple(name for name, _ in layout)
    encoder = build_encoder(spec.encoder_id)

    labels: list[int] = []
    blocks: list[np.ndarray] = []
    n_skipped = 0
    per_class_counts: dict[str, int] = {}
    for class_id, (name, files) in enumerate(layout):
        images: list[Image.Image] = []
        for path in files:
            img = _load_image(path)
            if img is None:
                n_skipped += 1
                print(f"warning: skipping undecodable image {path}", file=sys.stderr)
                continue
            images.append(img)
        if not images:
            raise ValueError(f"class {name!r} has no decodable images")
        per_class_counts[name] = len(images)
        for start in range(0, len(images), spec.batch_size):
            batch = images[start : start + spec.batch_size]
            blocks.append(encoder.encode_batch(batch, spec.image_size))
            labels.extend([class_id] * len(batch))

    vectors = np.concatenate(blocks).astype(np.float32)
    write_emb1(spec.output_path, class_names, labels, vectors)

    meta_path = Path(str(spec.output_path) + ".meta.json")
    meta = {
        "encoder_id": encoder.encoder_id,
        "pooling": encoder.pooling,
        "image_size": spec.image_size,
        "dim": int(vectors.shape[1]),
        "n_images": int(vectors.shape[0]),
        "n_skipped": n_skipped,
        "class_names": list(class_names),
        "per_class_counts": per_class_counts,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if n_skipped:
        print(f"skipped {n_skipped} undecodable image(s)", file=sys.stderr)
    return ExtractResult(
        output_path=spec.output_path,
        meta_path=meta_path,
        dim=int(vectors.shape[1]),
        n_images=int(vectors.shape[0]),
        n_skipped=n_skipped,
        class_names=class_names,
        per_class_counts=per_class_counts,
    )
