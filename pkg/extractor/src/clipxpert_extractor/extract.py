"""Folder-to-EMB1 extraction.

Walks an image root (either ``root/<class_name>/*.jpg`` or a flat folder),
encodes every decodable image plus one prompt per catalog class, and writes
the pipeline's input files:

* ``embeddings.emb1``  - one L2-normalized row per image
* ``anchors.emb1``     - one row per class name, catalog order
* ``labels.json``      - only when the folder structure encodes ground truth
* ``manifest.json``    - image order, skipped files, backend and prompt used

Images are visited in sorted path order so the row order is reproducible;
files that fail to decode are skipped and logged with their index.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .backends import make_backend
from .emb1 import ExtractorError, read_catalog, write_emb1, write_json, write_labels

logger = logging.getLogger(__name__)

PROMPT_TEMPLATE = "a photo of a {}"
IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp", ".tiff"}


@dataclass
class ExtractJob:
    image_root: str
    class_json: str
    output_dir: str
    model_id: str = "openai/clip-vit-base-patch16"
    backend: str = "clip"
    batch_size: int = 32
    hash_dim: int = 64

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExtractorError(f"batch size must be >= 1, got {self.batch_size}")


def discover_images(root):
    """Sorted (relative path, class-directory name or None) pairs."""
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise ExtractorError(f"image root {root!r} is not a directory")
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if os.path.splitext(name)[1].lower() not in IMAGE_EXTENSIONS:
                continue
            rel = os.path.relpath(os.path.join(dirpath, name), root)
            parts = rel.split(os.sep)
            class_dir = parts[0] if len(parts) > 1 else None
            found.append((rel, class_dir))
    return found


def extract(job: ExtractJob) -> dict:
    """Run the extraction; returns the manifest dictionary."""
    names = read_catalog(job.class_json)
    entries = discover_images(job.image_root)
    if not entries:
        raise ExtractorError(f"no images found under {job.image_root!r}")

    backend = make_backend(job.backend, job.model_id, job.hash_dim)

    kept: list[tuple[str, str | None]] = []
    skipped: list[dict] = []
    batches: list[np.ndarray] = []
    batch: list = []

    def flush():
        if batch:
            batches.append(backend.encode_images(batch))
            batch.clear()

    for index, (rel, class_dir) in enumerate(entries):
        path = os.path.join(job.image_root, rel)
        try:
            with Image.open(path) as image:
                image.load()
                batch.append(image.copy())
        except Exception as exc:
            logger.warning("skipping image %d (%s): %s", index, rel, exc)
            skipped.append({"index": index, "path": rel, "reason": str(exc)})
            continue
        kept.append((rel, class_dir))
        if len(batch) == job.batch_size:
            flush()
    flush()

    if not kept:
        raise ExtractorError("every image failed to decode; nothing to write")

    embeddings = np.vstack(batches)
    norms = np.linalg.norm(embeddings.astype(np.float64), axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    embeddings = (embeddings / norms).astype(np.float32)

    prompts = [PROMPT_TEMPLATE.format(name) for name in names]
    anchors = backend.encode_texts(prompts)
    anchor_norms = np.linalg.norm(anchors.astype(np.float64), axis=1,
                                  keepdims=True)
    anchor_norms[anchor_norms == 0] = 1.0
    anchors = (anchors / anchor_norms).astype(np.float32)

    os.makedirs(job.output_dir, exist_ok=True)
    write_emb1(embeddings, os.path.join(job.output_dir, "embeddings.emb1"))
    write_emb1(anchors, os.path.join(job.output_dir, "anchors.emb1"))

    class_dirs = {class_dir for _, class_dir in kept}
    has_structure = None not in class_dirs
    labels = None
    if has_structure:
        index_of = {name: i for i, name in enumerate(names)}
        labels = [index_of.get(class_dir, len(names)) for _, class_dir in kept]
        write_labels(labels, len(names), os.path.join(job.output_dir,
                                                      "labels.json"))

    manifest = {
        "tool": "clipxpert-extract",
        "backend": backend.name,
        "model": job.model_id if job.backend == "clip" else None,
        "prompt_template": PROMPT_TEMPLATE,
        "image_root": os.fspath(job.image_root),
        "images": [rel for rel, _ in kept],
        "skipped": skipped,
        "n_images": len(kept),
        "dim": int(embeddings.shape[1]),
        "classes": names,
        "labels_written": bool(has_structure),
    }
    write_json(manifest, os.path.join(job.output_dir, "manifest.json"))
    return manifest
