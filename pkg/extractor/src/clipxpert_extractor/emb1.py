"""Writers for the EMB1 wire format and its JSON sidecars.

This package talks to the prediction pipeline only through files, so it
carries its own (minimal) implementation of the formats:

EMB1 (little-endian): magic ``b"EMB1"``, uint32 rows, uint32 dim, then
rows*dim float32 values row-major.  Labels: ``{"C": int, "labels": [...]}``.
Catalog: JSON array of class-name strings.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

EMB1_MAGIC = b"EMB1"


class ExtractorError(Exception):
    """Any unrecoverable extraction failure (bad inputs, model load, IO)."""


def atomic_write_bytes(path, blob: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except OSError:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_emb1(matrix: np.ndarray, path) -> None:
    """Write a 2-D float array as EMB1; rows must be at least 1."""
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ExtractorError(f"need a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ExtractorError("matrix contains non-finite values")
    header = EMB1_MAGIC + struct.pack("<II", arr.shape[0], arr.shape[1])
    atomic_write_bytes(path, header + arr.tobytes(order="C"))


def write_labels(labels, n_known: int, path) -> None:
    payload = {"C": int(n_known), "labels": [int(v) for v in labels]}
    atomic_write_bytes(path, (json.dumps(payload) + "\n").encode("utf-8"))


def write_json(payload, path) -> None:
    atomic_write_bytes(path, (json.dumps(payload, indent=2) + "\n").encode("utf-8"))


def read_catalog(path) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            names = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ExtractorError(f"cannot read class catalog {path}: {exc}") from exc
    if (not isinstance(names, list) or len(names) < 2
            or any(not isinstance(n, str) or not n for n in names)):
        raise ExtractorError(
            f"{path}: catalog must be a JSON array of >= 2 class names")
    if len(set(names)) != len(names):
        raise ExtractorError(f"{path}: duplicate class names")
    return names
