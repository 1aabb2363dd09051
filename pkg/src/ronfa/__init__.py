"""Few-shot classification engine on embedding vectors.

Pipeline: sample N-way K-shot episodes from a labeled embedding set, inject
label noise, build one prototype per class with class-mean-initialized soft
K-means, classify queries with difference-of-Gaussians receptive fields whose
scale adapts until exactly one category neuron activates, and aggregate
accuracy with confidence intervals over many episodes.
"""

from ._version import ENGINE_VERSION
from .clustering import (
    ClusterConfig,
    PrototypeSet,
    init_centers,
    run_clustering,
    soft_assign,
    update_centers,
)
from .episodes import (
    OUTLIER,
    Episode,
    EpisodeSpec,
    NoiseSpec,
    OutlierPool,
    SupportItem,
    apply_noise,
    build_outlier_pool,
    derive_episode_seed,
    sample_episode,
)
from .errors import (
    CapacityError,
    ConfigError,
    DegenerateClassError,
    DegenerateClusterError,
    FormatError,
    RonfaError,
    ValidationError,
)
from .field import (
    FALLBACK_NEAREST,
    SINGLE_ACTIVATION,
    ActivationState,
    FieldConfig,
    PredictionResult,
    activation,
    adapt_scale,
    dog_kernel,
    field_response,
    predict,
)
from .harness import (
    EpisodeResult,
    EvalReport,
    RunConfig,
    confidence_interval,
    nearest_mean_baseline,
    run_evaluation,
    write_report,
)
from .store import (
    EmbeddingSet,
    LabeledEmbedding,
    SetDiagnostics,
    SynthSpec,
    generate_synthetic,
    generate_synthetic_with_centers,
    load_embeddings,
    save_embeddings,
    validate_set,
)

__version__ = ENGINE_VERSION

__all__ = [
    "ENGINE_VERSION",
    "ClusterConfig",
    "PrototypeSet",
    "init_centers",
    "run_clustering",
    "soft_assign",
    "update_centers",
    "OUTLIER",
    "Episode",
    "EpisodeSpec",
    "NoiseSpec",
    "OutlierPool",
    "SupportItem",
    "apply_noise",
    "build_outlier_pool",
    "derive_episode_seed",
    "sample_episode",
    "CapacityError",
    "ConfigError",
    "DegenerateClassError",
    "DegenerateClusterError",
    "FormatError",
    "RonfaError",
    "ValidationError",
    "FALLBACK_NEAREST",
    "SINGLE_ACTIVATION",
    "ActivationState",
    "FieldConfig",
    "PredictionResult",
    "activation",
    "adapt_scale",
    "dog_kernel",
    "field_response",
    "predict",
    "EpisodeResult",
    "EvalReport",
    "RunConfig",
    "confidence_interval",
    "nearest_mean_baseline",
    "run_evaluation",
    "write_report",
    "EmbeddingSet",
    "LabeledEmbedding",
    "SetDiagnostics",
    "SynthSpec",
    "generate_synthetic",
    "generate_synthetic_with_centers",
    "load_embeddings",
    "save_embeddings",
    "validate_set",
]
