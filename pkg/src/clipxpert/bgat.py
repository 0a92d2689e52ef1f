"""Adaptive score-threshold estimation.

Composes: positivity shift -> power transform at the fitted lambda ->
two-component Gaussian mixture -> midpoint of the component means ->
inverse transform back to raw score space.  The midpoint (rather than the
density intersection) is used because mixture means are estimated far more
robustly than the low component's variance, to which the intersection is
extremely sensitive; the intersection stays available in ``gmm1d`` for
diagnostics.

Every statistical failure degrades to a dataset-mean threshold with a
diagnostic instead of aborting; only an impossible input (fewer than four
scores) raises.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxcox import (
    DEFAULT_EPSILON_SHIFT,
    DEFAULT_SEARCH_RANGE,
    boxcox_transform,
    fit_lambda_mle,
    inverse_boxcox,
    positivity_shift,
)
from .errors import (
    DegenerateInput,
    DegenerateValues,
    FailedToSeparate,
    InverseDomainError,
    TooFewValues,
)
from .gmm1d import DEFAULT_MAX_ITER, DEFAULT_TOL, DEFAULT_VAR_FLOOR, GmmFit, fit_gmm2

METHOD_BGAT = "bgat"
METHOD_MEAN_FALLBACK = "mean_fallback"


@dataclass
class ThresholdEstimate:
    """A score threshold plus the component means mapped back to score space.

    When ``method == "bgat"`` the ordering ``mu_know < t_star < mu_unk``
    holds.  ``method`` may also carry a baseline strategy name when the
    estimate was built around a fixed threshold rather than a mixture fit.
    """

    t_star: float
    mu_know: float
    mu_unk: float
    lambda_star: float
    shift: float
    method: str
    gmm: GmmFit | None = None
    diagnostic: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "mu_know": self.mu_know,
            "mu_unk": self.mu_unk,
            "lambda_star": self.lambda_star,
            "shift": self.shift,
            "method": self.method,
            "diagnostic": self.diagnostic,
        }


def _score_values(scores) -> np.ndarray:
    values = getattr(scores, "values", scores)
    return np.asarray(values, dtype=np.float64).ravel()


def estimate_from_fixed_threshold(scores, t_star: float, method: str,
                                  diagnostic: str | None = None) -> ThresholdEstimate:
    """Wrap an externally chosen threshold in a ThresholdEstimate, with the
    side means taken as the means of the scores at or below / above it."""
    values = _score_values(scores)
    below = values[values <= t_star]
    above = values[values > t_star]
    mu_know = float(below.mean()) if below.size else float(t_star)
    mu_unk = float(above.mean()) if above.size else float(t_star)
    return ThresholdEstimate(float(t_star), mu_know, mu_unk, lambda_star=1.0,
                             shift=0.0, method=method, diagnostic=diagnostic)


def estimate_threshold(scores, use_boxcox: bool = True,
                       search_range=DEFAULT_SEARCH_RANGE,
                       epsilon_shift: float = DEFAULT_EPSILON_SHIFT,
                       gmm_tol: float = DEFAULT_TOL,
                       gmm_max_iter: int = DEFAULT_MAX_ITER,
                       gmm_var_floor: float = DEFAULT_VAR_FLOOR) -> ThresholdEstimate:
    """Estimate the known/unknown score threshold for one score vector.

    With ``use_boxcox`` off, lambda is pinned to 1 (a pure shift), so the
    mixture is fitted to the raw score shape.  Returns a ``mean_fallback``
    estimate instead of raising whenever the mixture cannot be fitted or
    the threshold cannot be mapped back to score space.
    """
    values = _score_values(scores)
    if values.size < 4:
        raise TooFewValues(f"need >= 4 scores, got {values.size}")

    try:
        if use_boxcox:
            fit = fit_lambda_mle(values, search_range, epsilon_shift)
            lam, shift = fit.lambda_star, fit.shift
        else:
            lam = 1.0
            shift = positivity_shift(values, epsilon_shift)
        transformed = boxcox_transform(values + shift, lam)
        gmm = fit_gmm2(transformed, tol=gmm_tol, max_iter=gmm_max_iter,
                       var_floor=gmm_var_floor)
        t_trans = 0.5 * (gmm.means[0] + gmm.means[1])
        t_star = inverse_boxcox(t_trans, lam) - shift
        mu_know = inverse_boxcox(gmm.means[0], lam) - shift
        mu_unk = inverse_boxcox(gmm.means[1], lam) - shift
    except (DegenerateValues, DegenerateInput, FailedToSeparate,
            InverseDomainError) as exc:
        # exact value for constant input so the tie rule (score > T*) is
        # decided by true equality, not by mean-rounding
        mean = float(values[0]) if np.ptp(values) == 0 else float(values.mean())
        return estimate_from_fixed_threshold(
            values, mean, METHOD_MEAN_FALLBACK,
            diagnostic=f"{type(exc).__name__}: {exc}")

    return ThresholdEstimate(float(t_star), float(mu_know), float(mu_unk),
                             lambda_star=float(lam), shift=float(shift),
                             method=METHOD_BGAT, gmm=gmm)
