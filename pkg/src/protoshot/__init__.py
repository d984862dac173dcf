"""Few-shot prototypical classification over precomputed embeddings.

Episodic K-way N-shot evaluation with Euclidean, cosine, hierarchical and
hyperbolic (Poincare-ball) prototype heads, plus an episodic meta-trainer
for a linear projection with analytic gradients.
"""

from .config import RunConfig, load_config
from .data import (
    DatasetSplit,
    EmbeddingSet,
    load_embeddings,
    load_splits,
    save_embeddings,
    save_splits,
)
from .episodes import (
    Episode,
    EvalReport,
    confidence_interval,
    derive_rng,
    episode_rng,
    evaluate_episode,
    hierarchical_precision,
    run_evaluation,
    sample_episode,
)
from .exceptions import (
    ConfigError,
    DataValidationError,
    GradientError,
    HierarchyError,
    NumericError,
    ProtoshotError,
    SamplingError,
    UsageError,
)
from .geometry import PoincareBall, clip_features
from .heads import (
    HeadConfig,
    PrototypeClassifier,
    PrototypeSet,
    build_prototypes,
    class_probabilities,
    compute_hierarchical_prototypes,
    compute_hyperbolic_prototypes,
    compute_prototypes,
    episode_loss_flat,
    episode_loss_hierarchical,
)
from .hierarchy import ClassHierarchy, LevelWeights, level_weights, load_hierarchy
from .synthetic import make_benchmark
from .trainer import (
    EpisodicProjectionTrainer,
    GradCheckReport,
    ProjectionModel,
    SgdState,
    TrainConfig,
    TrainResult,
    finite_difference_check,
    load_checkpoint,
    loss_and_gradients,
    meta_train,
    save_checkpoint,
    sgd_step,
)

__version__ = "0.1.0"

__all__ = [
    "ClassHierarchy",
    "ConfigError",
    "DataValidationError",
    "DatasetSplit",
    "EmbeddingSet",
    "Episode",
    "EpisodicProjectionTrainer",
    "EvalReport",
    "GradCheckReport",
    "GradientError",
    "HeadConfig",
    "HierarchyError",
    "LevelWeights",
    "NumericError",
    "PoincareBall",
    "ProjectionModel",
    "ProtoshotError",
    "PrototypeClassifier",
    "PrototypeSet",
    "RunConfig",
    "SamplingError",
    "SgdState",
    "TrainConfig",
    "TrainResult",
    "UsageError",
    "build_prototypes",
    "class_probabilities",
    "clip_features",
    "compute_hierarchical_prototypes",
    "compute_hyperbolic_prototypes",
    "compute_prototypes",
    "confidence_interval",
    "derive_rng",
    "episode_loss_flat",
    "episode_loss_hierarchical",
    "episode_rng",
    "evaluate_episode",
    "finite_difference_check",
    "hierarchical_precision",
    "level_weights",
    "load_checkpoint",
    "load_config",
    "load_embeddings",
    "load_hierarchy",
    "load_splits",
    "loss_and_gradients",
    "make_benchmark",
    "meta_train",
    "run_evaluation",
    "sample_episode",
    "save_checkpoint",
    "save_embeddings",
    "save_splits",
    "sgd_step",
]
