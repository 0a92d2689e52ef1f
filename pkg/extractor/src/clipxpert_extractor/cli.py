"""Command-line entry point for the embedding extractor."""

from __future__ import annotations

import argparse
import logging
import sys

from .emb1 import ExtractorError
from .extract import ExtractJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clipxpert-extract",
        description="Encode an image folder and a class-name list into the "
                    "EMB1 embedding files consumed by the clipxpert CLI.",
    )
    parser.add_argument("--images", required=True,
                        help="image root; class subfolders become labels")
    parser.add_argument("--classes", required=True,
                        help="JSON array of known class names")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model", default="openai/clip-vit-base-patch16",
                        help="model identifier for the clip backend")
    parser.add_argument("--backend", choices=("clip", "hash"), default="clip",
                        help="hash = deterministic digest encoder (no weights)")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--hash-dim", type=int, default=64,
                        help="embedding width for the hash backend")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    job = ExtractJob(
        image_root=args.images,
        class_json=args.classes,
        output_dir=args.out,
        model_id=args.model,
        backend=args.backend,
        batch_size=args.batch_size,
        hash_dim=args.hash_dim,
    )
    try:
        manifest = extract(job)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"encoded {manifest['n_images']} images "
          f"({len(manifest['skipped'])} skipped) into {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
