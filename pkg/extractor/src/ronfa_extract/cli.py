"""CLI: ronfa-extract --images-root DIR --out FILE [--encoder ID] ..."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .extract import ExtractSpec, extract_embeddings


def run_cli(argv: Sequence[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="ronfa-extract",
        description="Convert an image folder dataset into the EMB1 embedding format "
        "using a frozen vision encoder.",
    )
    parser.add_argument("--images-root", required=True,
                        help="dataset root, one subdirectory per class")
    parser.add_argument("--encoder", default="vit_b_16",
                        help="encoder id: a torchvision model name or projection:<dim>")
    parser.add_argument("--image-size", type=int, default=224)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--out", required=True, help="output EMB1 path")
    args = parser.parse_args(list(argv))

    try:
        spec = ExtractSpec(
            images_root=args.images_root,
            encoder_id=args.encoder,
            image_size=args.image_size,
            batch_size=args.batch_size,
            output_path=args.out,
        )
        result = extract_embeddings(spec)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"ronfa-extract: error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {result.output_path}: n={result.n_images} d={result.dim} "
        f"classes={len(result.class_names)} (skipped {result.n_skipped})"
    )
    return 0


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run_cli(sys.argv[1:] if argv is None else argv))
