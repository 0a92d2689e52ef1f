"""Box-Cox power transform, profile-likelihood lambda search, and inverse.

The transform is strictly increasing for every lambda, so it never changes
the ordering of a score vector; it only reshapes the distribution so that a
Gaussian mixture fits the transformed scores better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateValues,
    InverseDomainError,
    NonPositiveInput,
    TooFewValues,
)

LAMBDA_ZERO_EPS = 1e-10
DEFAULT_SEARCH_RANGE = (-5.0, 5.0)
DEFAULT_EPSILON_SHIFT = 1e-6
GRID_STEP = 0.01
REFINE_TOL = 1e-4

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class BoxCoxFit:
    """Result of the maximum-likelihood lambda search.

    ``shift`` is the non-negative offset added to the raw values before the
    transform (clears zeros/negatives); apply the same shift before using
    ``lambda_star`` on new values and subtract it after inverting.
    """

    lambda_star: float
    shift: float
    loglik: float
    search_range: tuple[float, float]


def boxcox_transform(values, lam: float) -> np.ndarray:
    """Apply the power transform ``(v**lam - 1) / lam`` (``ln v`` at lam = 0).

    ``|lam| < 1e-10`` is treated as the log branch for float safety.
    """
    v = np.asarray(values, dtype=np.float64)
    if np.any(v <= 0):
        raise NonPositiveInput("power transform requires all values > 0")
    if abs(lam) < LAMBDA_ZERO_EPS:
        return np.log(v)
    return (np.power(v, lam) - 1.0) / lam


def inverse_boxcox(value, lam: float):
    """Invert the power transform; errors when ``lam*value + 1 <= 0``."""
    v = np.asarray(value, dtype=np.float64)
    if abs(lam) < LAMBDA_ZERO_EPS:
        result = np.exp(v)
    else:
        base = lam * v + 1.0
        if np.any(base <= 0):
            raise InverseDomainError(
                f"lambda*value + 1 must be > 0, got {float(np.min(base)):.6g}")
        result = np.power(base, 1.0 / lam)
    if np.isscalar(value) or np.ndim(value) == 0:
        return float(result)
    return result


def positivity_shift(values, epsilon_shift: float = DEFAULT_EPSILON_SHIFT) -> float:
    """Offset that makes ``values + shift`` strictly positive."""
    v = np.asarray(values, dtype=np.float64)
    return max(0.0, -float(v.min())) + epsilon_shift


def profile_loglik(positive_values: np.ndarray, lam: float) -> float:
    """Profile log-likelihood of ``lam``: Gaussian fit of the transformed
    values plus the ``(lam - 1) * sum(log v)`` Jacobian term."""
    v = positive_values
    n = v.size
    with np.errstate(over="ignore", invalid="ignore"):
        y = boxcox_transform(v, lam)
        var = float(np.var(y))
    if not np.isfinite(var) or var <= 0.0:
        return -np.inf
    log_jacobian = (lam - 1.0) * float(np.sum(np.log(v)))
    return -0.5 * n * (math.log(2.0 * math.pi * var) + 1.0) + log_jacobian


def fit_lambda_mle(values, search_range: tuple[float, float] = DEFAULT_SEARCH_RANGE,
                   epsilon_shift: float = DEFAULT_EPSILON_SHIFT) -> BoxCoxFit:
    """Find the lambda maximizing the profile log-likelihood.

    Coarse grid (step 0.01) over ``search_range``, then golden-section
    refinement (tolerance 1e-4) around the best grid point.  The returned
    optimum is never worse than the best grid point.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 3:
        raise TooFewValues(f"need >= 3 values to fit lambda, got {v.size}")
    lo, hi = float(search_range[0]), float(search_range[1])
    if not lo < hi:
        raise ValueError(f"invalid search range [{lo}, {hi}]")

    shift = positivity_shift(v, epsilon_shift)
    shifted = v + shift
    if float(np.ptp(shifted)) == 0.0:
        raise DegenerateValues("values are constant; no lambda can normalize them")

    grid = np.arange(lo, hi + GRID_STEP / 2, GRID_STEP)
    objective = [profile_loglik(shifted, lam) for lam in grid]
    best_idx = int(np.argmax(objective))
    best_lam = float(grid[best_idx])
    best_val = objective[best_idx]
    if not np.isfinite(best_val):
        raise DegenerateValues("profile likelihood is degenerate at every lambda")

    a = float(grid[max(best_idx - 1, 0)])
    b = float(grid[min(best_idx + 1, grid.size - 1)])
    lam_ref, val_ref = _golden_section_max(
        lambda lam: profile_loglik(shifted, lam), a, b, REFINE_TOL)
    if val_ref > best_val:
        best_lam, best_val = lam_ref, val_ref
    return BoxCoxFit(best_lam, shift, best_val, (lo, hi))


def _golden_section_max(fn, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section search for the maximum of ``fn`` on [a, b]."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
    mid = 0.5 * (a + b)
    return mid, fn(mid)
