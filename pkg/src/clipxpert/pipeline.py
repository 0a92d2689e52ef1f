"""End-to-end open-set prediction pipeline and baseline threshold strategies.

One pass: score all samples from the original features, estimate the
adaptive threshold, optionally filter features through the unknown-subspace
module, re-score and re-estimate, then classify.  The known-class argmax
always comes from the ORIGINAL features, so feature filtering can only
affect which samples are flagged unknown, never how a known sample is
classified.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .bgat import (
    ThresholdEstimate,
    estimate_from_fixed_threshold,
    estimate_threshold,
)
from .data_io import EmbeddingMatrix, LabelVector
from .errors import InvalidConfig, OracleNeedsLabels
from .metrics import threshold_sweep
from .scoring import (
    SCORERS,
    ProbMatrix,
    ScoreVector,
    predict_with_threshold,
    score_samples,
    zero_shot_probs,
)
from .suff import DEFAULT_ALPHA_TEMPERATURE, DEFAULT_TAU, apply_suff

STRATEGY_BGAT = "bgat"
STRATEGY_MEAN = "mean"
STRATEGY_FIXED_HALF_MAX = "fixed_half_max"
STRATEGY_ORACLE = "oracle"
STRATEGIES = (STRATEGY_BGAT, STRATEGY_MEAN, STRATEGY_FIXED_HALF_MAX, STRATEGY_ORACLE)

BASELINE_STRATEGIES = (STRATEGY_MEAN, STRATEGY_FIXED_HALF_MAX, STRATEGY_ORACLE)


@dataclass
class PipelineConfig:
    scorer: str = "entropy"
    softmax_temperature: float = 0.01
    alpha_temperature: float = DEFAULT_ALPHA_TEMPERATURE
    tau: float = DEFAULT_TAU
    use_boxcox: bool = True
    use_suff: bool = True
    strategy: str = STRATEGY_BGAT
    seed: int = 0

    def __post_init__(self):
        if self.scorer not in SCORERS:
            raise InvalidConfig(f"scorer must be one of {SCORERS}, got {self.scorer!r}")
        if self.strategy not in STRATEGIES:
            raise InvalidConfig(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.softmax_temperature <= 0 or self.alpha_temperature <= 0:
            raise InvalidConfig("temperatures must be > 0")
        if not 0.0 < self.tau <= 1.0:
            raise InvalidConfig(f"tau must lie in (0, 1], got {self.tau}")

    def to_json_dict(self) -> dict:
        return {
            "scorer": self.scorer,
            "softmax_temperature": self.softmax_temperature,
            "alpha_temperature": self.alpha_temperature,
            "tau": self.tau,
            "use_boxcox": self.use_boxcox,
            "use_suff": self.use_suff,
            "strategy": self.strategy,
            "seed": self.seed,
        }


@dataclass
class PredictionReport:
    labels: LabelVector
    scores_initial: ScoreVector
    scores_final: ScoreVector
    threshold_initial: ThresholdEstimate
    threshold_final: ThresholdEstimate
    suff_applied: bool
    config: PipelineConfig
    timings: dict[str, float] = field(default_factory=dict)


def run_clipxpert(samples: EmbeddingMatrix, anchors: EmbeddingMatrix,
                  config: PipelineConfig) -> PredictionReport:
    """Full adaptive pipeline (strategy must be the adaptive one)."""
    if config.strategy != STRATEGY_BGAT:
        raise InvalidConfig(
            f"run_clipxpert uses the {STRATEGY_BGAT!r} strategy; "
            f"use run_baseline for {config.strategy!r}")
    return _run(samples, anchors, config, labels=None)


def run_baseline(samples: EmbeddingMatrix, anchors: EmbeddingMatrix,
                 config: PipelineConfig,
                 labels: LabelVector | None = None) -> PredictionReport:
    """Same pipeline with a baseline final threshold (mean, half-max, or
    the labels-aware oracle grid search; the oracle is a test device)."""
    if config.strategy not in BASELINE_STRATEGIES:
        raise InvalidConfig(
            f"run_baseline expects one of {BASELINE_STRATEGIES}, "
            f"got {config.strategy!r}")
    if config.strategy == STRATEGY_ORACLE and labels is None:
        raise OracleNeedsLabels("oracle strategy requires ground-truth labels")
    return _run(samples, anchors, config, labels=labels)


def _final_estimate(scores: ScoreVector, config: PipelineConfig,
                    probs0: ProbMatrix,
                    labels: LabelVector | None) -> ThresholdEstimate:
    values = scores.values
    if config.strategy == STRATEGY_BGAT:
        return estimate_threshold(scores, use_boxcox=config.use_boxcox)
    if config.strategy == STRATEGY_MEAN:
        return estimate_from_fixed_threshold(values, float(values.mean()),
                                             STRATEGY_MEAN)
    if config.strategy == STRATEGY_FIXED_HALF_MAX:
        return estimate_from_fixed_threshold(values, float(values.max()) / 2.0,
                                             STRATEGY_FIXED_HALF_MAX)
    if labels is None:
        raise OracleNeedsLabels("oracle strategy requires ground-truth labels")
    argmax = probs0.probs.argmax(axis=1)
    best_t, _ = threshold_sweep(values, labels, probs0.n_classes,
                                known_preds=argmax)
    return estimate_from_fixed_threshold(values, best_t, STRATEGY_ORACLE)


def _run(samples: EmbeddingMatrix, anchors: EmbeddingMatrix,
         config: PipelineConfig,
         labels: LabelVector | None) -> PredictionReport:
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    probs0 = zero_shot_probs(samples, anchors, config.softmax_temperature)
    scores0 = score_samples(probs0, config.scorer)
    timings["score_initial"] = time.perf_counter() - t0

    scores_final = scores0
    suff_applied = False
    threshold_initial: ThresholdEstimate | None = None

    if config.use_suff:
        # The partition that feeds the subspaces always comes from the
        # adaptive estimate; the strategy only picks the final threshold.
        t0 = time.perf_counter()
        bgat_initial = estimate_threshold(scores0, use_boxcox=config.use_boxcox)
        timings["threshold_initial"] = time.perf_counter() - t0
        threshold_initial = bgat_initial

        t0 = time.perf_counter()
        filtered, suff_applied = apply_suff(
            samples, anchors, scores0, bgat_initial,
            tau=config.tau, temperature=config.alpha_temperature)
        timings["suff"] = time.perf_counter() - t0

        if suff_applied:
            t0 = time.perf_counter()
            probs1 = zero_shot_probs(filtered, anchors, config.softmax_temperature)
            scores_final = score_samples(probs1, config.scorer)
            timings["score_final"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if (config.strategy == STRATEGY_BGAT and not suff_applied
            and threshold_initial is not None):
        threshold_final = threshold_initial
    else:
        threshold_final = _final_estimate(scores_final, config, probs0, labels)
    timings["threshold_final"] = time.perf_counter() - t0
    if threshold_initial is None:
        threshold_initial = threshold_final

    t0 = time.perf_counter()
    predictions = predict_with_threshold(probs0, scores_final,
                                         threshold_final.t_star)
    timings["predict"] = time.perf_counter() - t0

    return PredictionReport(
        labels=predictions,
        scores_initial=scores0,
        scores_final=scores_final,
        threshold_initial=threshold_initial,
        threshold_final=threshold_final,
        suff_applied=suff_applied,
        config=config,
        timings=timings,
    )
