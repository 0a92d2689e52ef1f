"""SVD subspace feature filtering to separate unknown-class samples.

High-confidence known and unknown samples (picked from the score
distribution around an estimated threshold) each span a principal-component
subspace.  Every sample is projected into both; the unknown-subspace
component, weighted by a per-sample mixing ratio, is subtracted from the
feature vector.  Samples that leaned toward a known anchor only through
directions shared with confidently-unknown samples lose that pull, which
raises their unknownness score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data_io import EmbeddingMatrix
from .errors import DimMismatch
from .bgat import ThresholdEstimate

logger = logging.getLogger(__name__)

DEFAULT_TAU = 0.9
DEFAULT_ALPHA_TEMPERATURE = 1.0
MIN_CONFIDENT = 2


@dataclass
class ConfidencePartition:
    """Indices of surely-known and surely-unknown samples (disjoint;
    everything between the two cut points is left out)."""

    know_indices: np.ndarray
    unk_indices: np.ndarray
    know_cut: float
    unk_cut: float


@dataclass
class SubspaceBasis:
    """Top-k right-singular-vector basis of a sample subset.

    Rows of ``w`` are orthonormal; ``k`` is the smallest rank whose
    cumulative squared-singular-value share reaches ``tau``.
    """

    w: np.ndarray
    k: int
    singular_values: np.ndarray
    tau: float
    source_count: int


def partition_confident(scores, est: ThresholdEstimate) -> ConfidencePartition:
    """Split samples into surely-known (score <= (mu_know + T*)/2) and
    surely-unknown (score > (mu_unk + T*)/2) index sets."""
    values = np.asarray(getattr(scores, "values", scores), dtype=np.float64)
    know_cut = 0.5 * (est.mu_know + est.t_star)
    unk_cut = 0.5 * (est.mu_unk + est.t_star)
    know = np.flatnonzero(values <= know_cut)
    unk = np.flatnonzero(values > unk_cut)
    return ConfidencePartition(know, unk, know_cut, unk_cut)


def subspace_basis(matrix: EmbeddingMatrix, tau: float = DEFAULT_TAU) -> SubspaceBasis:
    """Thin SVD of the (uncentered) row matrix, keeping the smallest rank k
    whose cumulative variance share is >= tau.

    Rows are expected to be unit vectors already, so no mean is subtracted.
    Exact-zero trailing singular values never enter the basis, even at
    tau = 1.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    x = matrix.as_float64()
    _, s, vt = np.linalg.svd(x, full_matrices=False)
    power = s**2
    total = power.sum()
    if total == 0.0:
        k = 1
    else:
        ratios = np.cumsum(power) / np.cumsum(power)[-1]
        k = int(np.searchsorted(ratios, tau, side="left")) + 1
    k = max(1, min(k, s.size))
    return SubspaceBasis(vt[:k].copy(), k, s, tau, matrix.rows)


def project(matrix: EmbeddingMatrix, basis: SubspaceBasis) -> EmbeddingMatrix:
    """Orthogonal projection of every row onto the basis span."""
    if matrix.dim != basis.w.shape[1]:
        raise DimMismatch(
            f"matrix dim {matrix.dim} != basis dim {basis.w.shape[1]}")
    x = matrix.as_float64()
    projected = (x @ basis.w.T) @ basis.w
    return EmbeddingMatrix(projected.astype(np.float32))


def mixing_ratio(samples: EmbeddingMatrix, proj_know: EmbeddingMatrix,
                 proj_unk: EmbeddingMatrix,
                 temperature: float = DEFAULT_ALPHA_TEMPERATURE) -> np.ndarray:
    """Per-sample share of unknown-subspace content, in (0, 1).

    Softmax over the cosines between each sample and its two projections;
    a zero-norm projection contributes cosine 0 (logged, not an error).
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    if not (samples.data.shape == proj_know.data.shape == proj_unk.data.shape):
        raise DimMismatch("sample and projection shapes differ")
    s_know = _rowwise_cosine(samples.as_float64(), proj_know.as_float64())
    s_unk = _rowwise_cosine(samples.as_float64(), proj_unk.as_float64())
    # sigmoid of the cosine gap == the two-way softmax, but never overflows
    return expit((s_unk - s_know) / temperature)


def _rowwise_cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    zero = (na == 0) | (nb == 0)
    if np.any(zero):
        logger.warning("cosine with %d zero-norm rows treated as 0", int(zero.sum()))
    denom = np.where(zero, 1.0, na * nb)
    return np.where(zero, 0.0, np.einsum("ij,ij->i", a, b) / denom)


def filter_features(samples: EmbeddingMatrix, alpha: np.ndarray,
                    proj_unk: EmbeddingMatrix) -> EmbeddingMatrix:
    """Subtract the alpha-weighted unknown-subspace projection row-wise.

    No renormalization: downstream cosine similarity is scale-free.
    """
    if samples.data.shape != proj_unk.data.shape:
        raise DimMismatch("sample and projection shapes differ")
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    if alpha.size != samples.rows:
        raise DimMismatch(f"{alpha.size} alphas for {samples.rows} rows")
    filtered = samples.as_float64() - alpha[:, None] * proj_unk.as_float64()
    return EmbeddingMatrix(filtered.astype(np.float32))


def apply_suff(samples: EmbeddingMatrix, anchors: EmbeddingMatrix | None,
               scores, est: ThresholdEstimate, tau: float = DEFAULT_TAU,
               temperature: float = DEFAULT_ALPHA_TEMPERATURE,
               min_confident: int = MIN_CONFIDENT):
    """Run the full filtering pass; returns ``(filtered, applied)``.

    A graceful no-op (original matrix, ``applied=False``) when either
    confident set is smaller than ``max(2, min_confident)``: a subspace
    built from one sample is just that sample's noise direction.
    """
    if anchors is not None and anchors.dim != samples.dim:
        raise DimMismatch(f"anchor dim {anchors.dim} != sample dim {samples.dim}")
    part = partition_confident(scores, est)
    needed = max(2, min_confident)
    if part.know_indices.size < needed or part.unk_indices.size < needed:
        return samples, False

    basis_know = subspace_basis(EmbeddingMatrix(samples.data[part.know_indices]), tau)
    basis_unk = subspace_basis(EmbeddingMatrix(samples.data[part.unk_indices]), tau)
    proj_know = project(samples, basis_know)
    proj_unk = project(samples, basis_unk)
    alpha = mixing_ratio(samples, proj_know, proj_unk, temperature)
    return filter_features(samples, alpha, proj_unk), True
