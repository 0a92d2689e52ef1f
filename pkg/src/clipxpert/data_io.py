"""Embedding/label file formats, validation, and synthetic data generation.

File formats
------------
EMB1 binary (little-endian):
    bytes 0-3   magic ``b"EMB1"``
    bytes 4-7   uint32 row count
    bytes 8-11  uint32 feature dimensionality
    then rows*dim IEEE-754 float32 values, row-major.

CSV fallback: one row per line, comma-separated decimals, no header.
Files are dispatched on the magic bytes, so either format loads through
:func:`load_embeddings`.

Label sidecar: JSON object ``{"C": int, "labels": [int, ...]}`` where values
``0..C-1`` are known classes and ``C`` marks ground-truth unknown.  Class
catalog: JSON array of strings.

The synthetic generator uses numpy's ``default_rng`` (PCG64).  The PRNG
algorithm is part of the format: exact sample values are only reproducible
by implementations using PCG64 with the same seed.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatch,
    InvalidConfig,
    InvalidMatrix,
    IoFailure,
    MagicMismatch,
    NonFiniteValue,
)

EMB1_MAGIC = b"EMB1"
UNIT_NORM_TOL = 1e-5


@dataclass
class EmbeddingMatrix:
    """Dense row-major matrix of feature vectors.

    ``data`` is stored as C-contiguous float32, the on-disk precision, so
    save/load round trips are bit-exact.  Numerical routines should work on
    :meth:`as_float64` copies.
    """

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise InvalidMatrix(f"expected 2-D data, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidMatrix(f"matrix must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("embedding matrix contains non-finite values")
        if self.normalized:
            norms = np.linalg.norm(arr.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
                worst = float(np.max(np.abs(norms - 1.0)))
                raise InvalidMatrix(
                    f"normalized flag set but row norms deviate by up to {worst:.2e}"
                )
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def as_float64(self) -> np.ndarray:
        return self.data.astype(np.float64)


@dataclass
class ClassCatalog:
    """Ordered list of known class names."""

    names: list[str]

    def __post_init__(self):
        if len(self.names) < 2:
            raise InvalidConfig("catalog needs at least 2 class names")
        if any(not n for n in self.names):
            raise InvalidConfig("catalog contains an empty class name")
        if len(set(self.names)) != len(self.names):
            raise InvalidConfig("catalog contains duplicate class names")

    @property
    def C(self) -> int:
        return len(self.names)


@dataclass
class LabelVector:
    """Per-sample integer labels; value ``n_known`` marks ground-truth unknown."""

    labels: np.ndarray
    n_known: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.labels, dtype=np.int64)
        if arr.ndim != 1:
            raise InvalidConfig("labels must be a 1-D vector")
        if self.n_known < 1:
            raise InvalidConfig("n_known must be >= 1")
        if arr.size and (arr.min() < 0 or arr.max() > self.n_known):
            raise InvalidConfig(
                f"labels must lie in [0, {self.n_known}], got range "
                f"[{arr.min()}, {arr.max()}]"
            )
        self.labels = arr

    def __len__(self) -> int:
        return self.labels.size


@dataclass
class SyntheticConfig:
    """Parameters of the synthetic open-set dataset generator.

    ``tendency_fraction`` of the unknown class centers are placed close to a
    randomly chosen known center (offset scale ``tendency_offset_sigma``,
    defaulting to ``known_noise_sigma``), which reproduces the failure mode
    where unknown samples score like confident known ones.  The remaining
    unknown centers are uniform on the sphere.
    """

    n_known: int = 10
    n_unknown: int = 10
    dim: int = 64
    samples_per_class: int = 50
    known_noise_sigma: float = 0.1
    unknown_noise_sigma: float = 0.3
    tendency_fraction: float = 0.4
    anchor_perturb_sigma: float = 0.0
    tendency_offset_sigma: float | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.n_known, self.n_unknown, self.dim, self.samples_per_class) < 1:
            raise InvalidConfig("all counts must be >= 1")
        if min(self.known_noise_sigma, self.unknown_noise_sigma,
               self.anchor_perturb_sigma) < 0:
            raise InvalidConfig("noise sigmas must be >= 0")
        if self.tendency_offset_sigma is None:
            self.tendency_offset_sigma = self.known_noise_sigma
        elif self.tendency_offset_sigma < 0:
            raise InvalidConfig("tendency_offset_sigma must be >= 0")
        if not 0.0 <= self.tendency_fraction <= 1.0:
            raise InvalidConfig("tendency_fraction must lie in [0, 1]")


# --- EMB1 / CSV persistence ---------------------------------------------.


def save_embeddings(matrix: EmbeddingMatrix, path) -> None:
    """Write ``matrix`` in the EMB1 binary format (atomic: temp + rename)."""
    header = EMB1_MAGIC + struct.pack("<II", matrix.rows, matrix.dim)
    payload = matrix.data.astype("<f4", copy=False).tobytes(order="C")
    try:
        _atomic_write_bytes(path, header + payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_embeddings(path) -> EmbeddingMatrix:
    """Load an EMB1 binary file, falling back to CSV when the magic is absent."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if blob[:4] == EMB1_MAGIC:
        if len(blob) < 12:
            raise DimMismatch(f"{path}: truncated EMB1 header ({len(blob)} bytes)")
        rows, dim = struct.unpack("<II", blob[4:12])
        expected = 12 + 4 * rows * dim
        if len(blob) != expected:
            raise DimMismatch(
                f"{path}: header declares {rows}x{dim} "
                f"({expected} bytes) but file has {len(blob)} bytes"
            )
        data = np.frombuffer(blob[12:], dtype="<f4").reshape(rows, dim)
        return EmbeddingMatrix(data.copy())
    return _load_csv(path, blob)


def _load_csv(path, blob: bytes) -> EmbeddingMatrix:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MagicMismatch(f"{path}: not EMB1 and not text/CSV") from exc
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            values = [float(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise MagicMismatch(
                f"{path}: not EMB1 and line {lineno} is not CSV decimals"
            ) from exc
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DimMismatch(
                f"{path}: line {lineno} has {len(values)} columns, expected {width}"
            )
        rows.append(values)
    if not rows:
        raise MagicMismatch(f"{path}: empty file is neither EMB1 nor CSV")
    return EmbeddingMatrix(np.asarray(rows, dtype=np.float32))


def save_labels(labels: LabelVector, path) -> None:
    payload = {"C": int(labels.n_known), "labels": [int(v) for v in labels.labels]}
    _atomic_write_bytes(path, (json.dumps(payload) + "\n").encode("utf-8"))


def load_labels(path) -> LabelVector:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not a JSON label sidecar: {exc}") from exc
    if not isinstance(payload, dict) or "C" not in payload or "labels" not in payload:
        raise InvalidConfig(f'{path}: expected {{"C": int, "labels": [...]}}')
    return LabelVector(np.asarray(payload["labels"], dtype=np.int64),
                       int(payload["C"]))


def save_catalog(catalog: ClassCatalog, path) -> None:
    _atomic_write_bytes(path, (json.dumps(catalog.names) + "\n").encode("utf-8"))


def load_catalog(path) -> ClassCatalog:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            names = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not a JSON class catalog: {exc}") from exc
    if not isinstance(names, list):
        raise InvalidConfig(f"{path}: catalog must be a JSON array of strings")
    return ClassCatalog([str(n) for n in names])


def _atomic_write_bytes(path, blob: bytes) -> None:
    """Write via a temp file in the target directory, then rename."""
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


# --- synthetic data -----------------------------------------------------.


def _unit_rows(arr: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return arr / norms


def generate_synthetic(config: SyntheticConfig):
    """Generate a deterministic synthetic open-set dataset.

    Returns ``(samples, anchors, labels)``: an EmbeddingMatrix of
    ``(n_known + n_unknown) * samples_per_class`` unit rows (known classes
    first, class by class), an EmbeddingMatrix of ``n_known`` anchors, and
    the ground-truth LabelVector (unknown classes all map to ``n_known``).
    """
    rng = np.random.default_rng(config.seed)
    dim = config.dim

    known_centers = _unit_rows(rng.standard_normal((config.n_known, dim)))

    n_tend = int(round(config.tendency_fraction * config.n_unknown))
    unknown_centers = np.empty((config.n_unknown, dim))
    for j in range(config.n_unknown):
        if j < n_tend:
            target = known_centers[rng.integers(config.n_known)]
            offset = config.tendency_offset_sigma * rng.standard_normal(dim)
            unknown_centers[j] = target + offset
        else:
            unknown_centers[j] = rng.standard_normal(dim)
    unknown_centers = _unit_rows(unknown_centers)

    per = config.samples_per_class
    blocks = []
    labels = []
    for c in range(config.n_known):
        noise = config.known_noise_sigma * rng.standard_normal((per, dim))
        blocks.append(_unit_rows(known_centers[c] + noise))
        labels.extend([c] * per)
    for j in range(config.n_unknown):
        noise = config.unknown_noise_sigma * rng.standard_normal((per, dim))
        blocks.append(_unit_rows(unknown_centers[j] + noise))
        labels.extend([config.n_known] * per)

    anchors = known_centers
    if config.anchor_perturb_sigma > 0:
        anchors = anchors + config.anchor_perturb_sigma * rng.standard_normal(
            (config.n_known, dim))
    anchors = _unit_rows(anchors)

    samples = EmbeddingMatrix(np.vstack(blocks), normalized=True)
    anchor_matrix = EmbeddingMatrix(anchors, normalized=True)
    label_vector = LabelVector(np.asarray(labels, dtype=np.int64), config.n_known)
    return samples, anchor_matrix, label_vector
