"""Zero-shot classification over embeddings and per-sample unknownness scores.

Class probabilities are a softmax over cosine similarities between sample
rows and anchor rows, scaled by a temperature.  All scorers are oriented
"higher = more unknown" so a single threshold rule applies to every scorer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data_io import EmbeddingMatrix, LabelVector
from .errors import DimMismatch, MissingLogits, NonPositiveTemperature

SCORERS = ("entropy", "mcm", "var", "energy")

ROW_SUM_TOL = 1e-6


@dataclass
class ProbMatrix:
    """Per-sample known-class probabilities plus the raw cosine logits."""

    probs: np.ndarray
    temperature: float
    cosines: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 2:
            raise DimMismatch("probability matrix must be 2-D")
        if np.any(p < 0) or np.any(p > 1):
            raise DimMismatch("probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise DimMismatch("probability rows must sum to 1")
        self.probs = p

    @property
    def rows(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]


@dataclass
class ScoreVector:
    """Per-sample scalar scores, fixed orientation: higher = more unknown."""

    values: np.ndarray
    scorer: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise DimMismatch("scores must be a 1-D vector")
        if not np.all(np.isfinite(v)):
            raise DimMismatch("scores contain non-finite values")
        self.values = v

    def __len__(self) -> int:
        return self.values.size


def cosine_matrix(samples: EmbeddingMatrix, anchors: EmbeddingMatrix) -> np.ndarray:
    """Pairwise cosine similarity between sample rows and anchor rows.

    Zero-norm rows (possible after feature filtering) yield cosine 0.
    """
    if samples.dim != anchors.dim:
        raise DimMismatch(
            f"sample dim {samples.dim} != anchor dim {anchors.dim}")
    a = samples.as_float64()
    b = anchors.as_float64()
    a_norm = np.linalg.norm(a, axis=1, keepdims=True)
    b_norm = np.linalg.norm(b, axis=1, keepdims=True)
    a_norm[a_norm == 0] = 1.0
    b_norm[b_norm == 0] = 1.0
    return (a / a_norm) @ (b / b_norm).T


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; shift-invariant per row."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def zero_shot_probs(samples: EmbeddingMatrix, anchors: EmbeddingMatrix,
                    temperature: float = 0.01) -> ProbMatrix:
    """Softmax over temperature-scaled cosine similarities, row by row.

    The temperature default (0.01) matches the logit scale conventional for
    contrastive vision-language embeddings; with unit vectors and t = 1 the
    rows would be nearly uniform.
    """
    if temperature <= 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    if anchors.rows < 2:
        raise DimMismatch("need at least 2 anchors for classification")
    cos = cosine_matrix(samples, anchors)
    probs = softmax_rows(cos / temperature)
    return ProbMatrix(probs, temperature, cosines=cos)


def score_samples(probs: ProbMatrix, scorer: str = "entropy",
                  logits: np.ndarray | None = None) -> ScoreVector:
    """Reduce a probability row to one unknownness score.

    entropy  -sum p log p, the default; 0 for one-hot rows, ln C for uniform.
    mcm      1 - max_c p (flipped max-softmax confidence).
    var      ((C-1)/C^2) - var(p); one-hot rows map to 0, uniform to the max.
    energy   -logsumexp(cosine / t); needs the raw cosine logits.
    """
    if scorer not in SCORERS:
        raise ValueError(f"unknown scorer {scorer!r}, expected one of {SCORERS}")
    p = probs.probs
    if scorer == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0, p * np.log(p), 0.0)
        values = np.maximum(-terms.sum(axis=1), 0.0)
    elif scorer == "mcm":
        values = 1.0 - p.max(axis=1)
    elif scorer == "var":
        var_max = (probs.n_classes - 1) / probs.n_classes**2
        values = var_max - p.var(axis=1)
    else:  # energy
        raw = logits if logits is not None else probs.cosines
        if raw is None:
            raise MissingLogits("energy score needs the raw cosine logits")
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != p.shape:
            raise DimMismatch(
                f"logit shape {raw.shape} != probability shape {p.shape}")
        values = -logsumexp(raw / probs.temperature, axis=1)
    return ScoreVector(values, scorer)


def predict_with_threshold(probs: ProbMatrix, scores: ScoreVector,
                           threshold: float) -> LabelVector:
    """Label a sample unknown (= C) when its score strictly exceeds the
    threshold, otherwise assign the argmax class (ties -> lowest index)."""
    if len(scores) != probs.rows:
        raise DimMismatch(
            f"{len(scores)} scores for {probs.rows} probability rows")
    known = probs.probs.argmax(axis=1)
    labels = np.where(scores.values > threshold, probs.n_classes, known)
    return LabelVector(labels.astype(np.int64), probs.n_classes)
