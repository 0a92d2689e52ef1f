"""Two-component 1-D Gaussian mixture fitting plus density-geometry oracles.

EM runs from a deterministic start (25th/75th percentile means, equal
weights, shared sample variance), with responsibilities computed in log
space: unknownness scores pile up near one mode and linear-space EM
underflows there.

The oracle functions (density intersection, total-misclassification-error
functional, and the sensitivity of the intersection to the low component's
spread) exist so tests can check the statistical claims behind using the
midpoint of the means as the production threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, ndtr

from .errors import (
    DegenerateInput,
    FailedToSeparate,
    IdenticalDistributions,
    InvalidStep,
    TooFewValues,
)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 200
DEFAULT_VAR_FLOOR = 1e-8
MEAN_SEPARATION_EPS = 1e-9

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class GmmFit:
    """Fitted mixture, components sorted so ``means[0] <= means[1]``.

    Component 0 is the low-score (known) mode, component 1 the high-score
    (unknown) mode.  ``loglik_trace`` holds the log-likelihood after each
    EM iteration; it must be non-decreasing.
    """

    weights: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray
    n_iter: int
    loglik: float
    converged: bool
    loglik_trace: list[float] = field(default_factory=list, repr=False)


def _component_logpdf(x: np.ndarray, mean: float, sigma: float) -> np.ndarray:
    z = (x - mean) / sigma
    return -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI


def fit_gmm2(values, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
             var_floor: float = DEFAULT_VAR_FLOOR) -> GmmFit:
    """Fit a two-component 1-D Gaussian mixture with EM.

    Deterministic: the same input vector always yields the same fit.
    Raises ``FailedToSeparate`` when the two means coincide at convergence
    (callers are expected to fall back to a simpler threshold).
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 4:
        raise TooFewValues(f"need >= 4 values for a 2-component fit, got {x.size}")
    if float(np.ptp(x)) == 0.0:
        raise DegenerateInput("all values identical")

    means = np.percentile(x, [25.0, 75.0]).astype(np.float64)
    shared_var = max(float(np.var(x)), var_floor)
    sigmas = np.full(2, math.sqrt(shared_var))
    weights = np.full(2, 0.5)

    trace: list[float] = []
    prev_ll = -np.inf
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        log_joint = np.stack([
            np.log(weights[k]) + _component_logpdf(x, means[k], sigmas[k])
            for k in range(2)
        ])  # (2, n)
        log_norm = logsumexp(log_joint, axis=0)
        ll = float(log_norm.sum())
        resp = np.exp(log_joint - log_norm)

        counts = resp.sum(axis=1)
        if np.any(counts < 1e-12):
            raise FailedToSeparate("a mixture component collapsed to zero weight")
        means = (resp @ x) / counts
        var = np.einsum("ki,ki->k", resp, (x[None, :] - means[:, None]) ** 2) / counts
        sigmas = np.sqrt(np.maximum(var, var_floor))
        weights = counts / x.size

        trace.append(ll)
        if ll - prev_ll < tol and n_iter > 1:
            converged = True
            break
        prev_ll = ll

    order = np.argsort(means, kind="stable")
    means, sigmas, weights = means[order], sigmas[order], weights[order]
    if abs(means[1] - means[0]) < MEAN_SEPARATION_EPS:
        raise FailedToSeparate(
            f"component means coincide ({means[0]:.6g} vs {means[1]:.6g})")
    return GmmFit(weights, means, sigmas, n_iter, trace[-1], converged, trace)


@dataclass
class GaussianIntersection:
    """Density-intersection abscissa; ``between_means`` is False when no
    root lies strictly between the two means and the nearest-to-midpoint
    fallback was used."""

    x: float
    between_means: bool


def gaussian_intersection(mu1: float, sigma1: float, mu2: float,
                          sigma2: float) -> GaussianIntersection:
    """Solve ``f1(x) = f2(x)`` for two Gaussian densities.

    Equal spreads give the midpoint.  Otherwise the log-density equation is
    a quadratic; the root strictly between the means is returned when it
    exists, else the root nearest the midpoint, flagged.
    """
    if sigma1 <= 0 or sigma2 <= 0:
        raise ValueError("sigmas must be > 0")
    if mu1 == mu2 and sigma1 == sigma2:
        raise IdenticalDistributions("the two densities coincide everywhere")

    mid = 0.5 * (mu1 + mu2)
    if sigma1 == sigma2:
        return GaussianIntersection(mid, True)

    # (x-mu1)^2/s1^2 - (x-mu2)^2/s2^2 = 2 ln(s2/s1), expanded to a*x^2+b*x+c.
    inv1, inv2 = 1.0 / sigma1**2, 1.0 / sigma2**2
    a = inv1 - inv2
    b = -2.0 * (mu1 * inv1 - mu2 * inv2)
    c = mu1**2 * inv1 - mu2**2 * inv2 - 2.0 * math.log(sigma2 / sigma1)
    if a == 0.0:  # sigmas differ by < 1 ulp of 1/s^2; equation degenerates to linear
        if b == 0.0:
            raise IdenticalDistributions("densities indistinguishable at float precision")
        x = -c / b
        return GaussianIntersection(x, min(mu1, mu2) < x < max(mu1, mu2))
    disc = b * b - 4.0 * a * c
    if disc < 0:
        disc = 0.0
    sqrt_disc = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sqrt_disc, b if b != 0 else 1.0))
    roots = sorted({q / a, c / q} if q != 0 else {-b / (2 * a) + sqrt_disc / (2 * a),
                                                  -b / (2 * a) - sqrt_disc / (2 * a)})

    low, high = min(mu1, mu2), max(mu1, mu2)
    between = [r for r in roots if low < r < high]
    if between:
        best = min(between, key=lambda r: (abs(r - mid), r))
        return GaussianIntersection(best, True)
    best = min(roots, key=lambda r: (abs(r - mid), r))
    return GaussianIntersection(best, False)


def classification_error(t: float, mu1: float, sigma1: float, mu2: float,
                         sigma2: float) -> float:
    """Total misclassification area at threshold ``t``: mass of the high
    component below ``t`` plus mass of the low component above ``t``."""
    if sigma1 <= 0 or sigma2 <= 0:
        raise ValueError("sigmas must be > 0")
    return float(ndtr((t - mu2) / sigma2) + 1.0 - ndtr((t - mu1) / sigma1))


def intersection_sensitivity(mu1: float, sigma1: float, mu2: float,
                             sigma2: float, h: float) -> float:
    """Central finite difference of the intersection abscissa with respect
    to the low component's sigma."""
    if h <= 0:
        raise InvalidStep(f"step must be > 0, got {h}")
    if sigma1 - h <= 0:
        raise InvalidStep(f"step {h} too large for sigma1 = {sigma1}")
    x_plus = gaussian_intersection(mu1, sigma1 + h, mu2, sigma2).x
    x_minus = gaussian_intersection(mu1, sigma1 - h, mu2, sigma2).x
    return (x_plus - x_minus) / (2.0 * h)
