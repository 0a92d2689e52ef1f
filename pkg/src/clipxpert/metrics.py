"""Evaluation: per-class accuracy, unknown accuracy, their harmonic mean
(HOS), rank-based AUROC, and labeled threshold sweeps.

Known-class accuracy is macro-averaged over the known classes that have
support; classes with zero support are skipped with a flag rather than
contributing 0/0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DimMismatch, SingleClassOnly

__all__ = ["EvalResult", "evaluate", "auroc", "threshold_sweep", "hos_score",
           "sweep_curve_csv"]


@dataclass
class EvalResult:
    acc_known: float
    acc_unknown: float
    hos: float
    per_class: list[tuple[int, float, int]]  # (class index, accuracy, support)
    confusion: np.ndarray                    # (C+1) x (C+1), rows = truth
    n_samples: int
    flags: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "acc_known": self.acc_known,
            "acc_unknown": self.acc_unknown,
            "hos": self.hos,
            "per_class": [
                {"class": c, "accuracy": a, "support": s}
                for c, a, s in self.per_class
            ],
            "confusion": self.confusion.tolist(),
            "n_samples": self.n_samples,
            "flags": list(self.flags),
        }


def hos_score(acc_known: float, acc_unknown: float) -> float:
    """Harmonic mean of the two accuracies, with 0/0 defined as 0."""
    total = acc_known + acc_unknown
    if total == 0.0:
        return 0.0
    return 2.0 * acc_known * acc_unknown / total


def _label_array(labels) -> np.ndarray:
    return np.asarray(getattr(labels, "labels", labels), dtype=np.int64).ravel()


def _score_array(scores) -> np.ndarray:
    return np.asarray(getattr(scores, "values", scores), dtype=np.float64).ravel()


def evaluate(preds, truth, n_known: int) -> EvalResult:
    """Score predictions against ground truth; label ``n_known`` is the
    unknown class on both sides."""
    p = _label_array(preds)
    t = _label_array(truth)
    if p.size != t.size:
        raise DimMismatch(f"{p.size} predictions for {t.size} labels")
    if p.size == 0:
        raise DimMismatch("empty prediction/label vectors")
    if min(p.min(), t.min()) < 0 or max(p.max(), t.max()) > n_known:
        raise DimMismatch(f"labels must lie in [0, {n_known}]")

    side = n_known + 1
    confusion = np.bincount(t * side + p, minlength=side * side).reshape(side, side)
    support = confusion.sum(axis=1)
    correct = confusion.diagonal()

    flags: list[str] = []
    per_class: list[tuple[int, float, int]] = []
    known_accs = []
    for c in range(n_known):
        if support[c] == 0:
            flags.append(f"class {c} has no support; excluded from macro average")
            per_class.append((c, float("nan"), 0))
            continue
        acc = correct[c] / support[c]
        per_class.append((c, float(acc), int(support[c])))
        known_accs.append(acc)

    if known_accs:
        acc_known = float(np.mean(known_accs))
    else:
        acc_known = 0.0
        flags.append("no known-class support; hos forced to 0")
    if support[n_known] > 0:
        acc_unknown = float(correct[n_known] / support[n_known])
    else:
        acc_unknown = 0.0
        flags.append("no unknown-class support; hos forced to 0")

    return EvalResult(acc_known, acc_unknown, hos_score(acc_known, acc_unknown),
                      per_class, confusion, int(p.size), flags)


def auroc(scores, truth, n_known: int) -> float:
    """Rank-based AUROC of "higher score = unknown"; ties share ranks."""
    s = _score_array(scores)
    t = _label_array(truth)
    if s.size != t.size:
        raise DimMismatch(f"{s.size} scores for {t.size} labels")
    positive = t == n_known
    n_pos = int(positive.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassOnly("need both known and unknown samples for AUROC")
    ranks = rankdata(s)
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def threshold_sweep(scores, truth, n_known: int, known_preds=None):
    """HOS over a grid of thresholds: midpoints between consecutive sorted
    unique scores plus the two infinite sentinels.

    ``known_preds`` holds the class assigned to a sample when it falls on
    the known side; without it, known-truth samples are assumed correctly
    classified (pure detection sweep).  Returns ``(best_threshold, curve)``
    with the curve as a list of ``(threshold, hos)``; ties on HOS resolve
    to the smallest threshold.
    """
    s = _score_array(scores)
    t = _label_array(truth)
    if s.size != t.size:
        raise DimMismatch(f"{s.size} scores for {t.size} labels")
    if known_preds is None:
        base = np.where(t < n_known, t, 0)
    else:
        base = _label_array(known_preds)
        if base.size != s.size:
            raise DimMismatch(f"{base.size} known predictions for {s.size} scores")

    uniq = np.unique(s)
    candidates = np.concatenate(([-np.inf], 0.5 * (uniq[1:] + uniq[:-1]), [np.inf]))
    curve = []
    best_t = float(candidates[0])
    best_hos = -1.0
    for cand in candidates:
        preds = np.where(s > cand, n_known, base)
        res = evaluate(preds, t, n_known)
        curve.append((float(cand), res.hos))
        if res.hos > best_hos:
            best_hos = res.hos
            best_t = float(cand)
    return best_t, curve


def sweep_curve_csv(curve) -> str:
    """Serialize a threshold_sweep curve as two-column CSV text."""
    lines = ["threshold,hos"]
    lines.extend(f"{threshold!r},{hos!r}" for threshold, hos in curve)
    return "\n".join(lines) + "\n"
