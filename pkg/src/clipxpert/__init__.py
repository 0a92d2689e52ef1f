"""Training-free open-set recognition on embedding matrices.

Given sample embeddings and per-class anchor embeddings, the pipeline
classifies each sample into one of the known classes or a single unknown
class.  The threshold that separates known from unknown scores is estimated
adaptively (power transform + two-component Gaussian mixture + midpoint of
the component means), and an optional SVD subspace filter removes the
unknown-leaning feature components before the final decision.
"""

__version__ = "0.1.0"

from .bgat import ThresholdEstimate, estimate_threshold
from .data_io import (
    ClassCatalog,
    EmbeddingMatrix,
    LabelVector,
    SyntheticConfig,
    generate_synthetic,
    load_embeddings,
    save_embeddings,
)
from .metrics import EvalResult, auroc, evaluate, threshold_sweep
from .pipeline import (
    PipelineConfig,
    PredictionReport,
    run_baseline,
    run_clipxpert,
)
from .scoring import (
    ProbMatrix,
    ScoreVector,
    predict_with_threshold,
    score_samples,
    zero_shot_probs,
)
from .suff import apply_suff

__all__ = [
    "ClassCatalog",
    "EmbeddingMatrix",
    "EvalResult",
    "LabelVector",
    "PipelineConfig",
    "PredictionReport",
    "ProbMatrix",
    "ScoreVector",
    "SyntheticConfig",
    "ThresholdEstimate",
    "apply_suff",
    "auroc",
    "estimate_threshold",
    "evaluate",
    "generate_synthetic",
    "load_embeddings",
    "predict_with_threshold",
    "run_baseline",
    "run_clipxpert",
    "save_embeddings",
    "score_samples",
    "threshold_sweep",
    "zero_shot_probs",
    "__version__",
]
