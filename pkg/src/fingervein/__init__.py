"""Finger-vein verification with self-taught features.

Pipeline: evolved contrast remapping, patch sampling, PCA whitening, a
sparse autoencoder trained by L-BFGS, convolution + mean pooling into
image-level features, per-user one-class Gaussian models, and EER/AUC
evaluation under a repeated enroll/test protocol.
"""

from .autoencoder import (
    AutoencoderParams,
    SparseAutoencoder,
    SparsityHyper,
    TrainReport,
    cost,
    cost_and_gradient,
    forward,
    gradient,
    init_params,
    kl_divergence,
    mean_hidden_activation,
    train_lbfgs,
)
from .bundle import (
    CorruptBundleError,
    ModelBundle,
    UnsupportedVersionError,
    load_bundle,
    save_bundle,
)
from .classifier import (
    OneClassGaussian,
    ThresholdStrategy,
    select_threshold,
)
from .config import PipelineConfig, derive_seed, load_config, parse_config
from .dataset import (
    EmptyDatasetError,
    SampleRecord,
    SplitPlan,
    SynthConfig,
    export_dataset,
    load_dataset,
    split_protocol,
    synthesize_dataset,
)
from .enhancement import (
    GaConfig,
    GeneticContrastEnhancer,
    RemapCurve,
    apply_remap,
    evolve,
    remap_fitness,
    sobel_edge_count,
)
from .features import (
    ConvolutionalFeatureExtractor,
    FeatureBank,
    build_feature_bank,
    convolve_features,
    load_features_text,
    mean_pool,
    represent,
    save_features_text,
)
from .images import (
    extract_patches,
    normalize_zero_mean,
    resize_area,
    sample_patches,
)
from .metrics import RocCurve, auc, eer, roc
from .optimize import OptimizeResult, minimize_lbfgs
from .pipeline import (
    enroll_users,
    evaluate_bundle,
    learn_features,
    represent_image,
    sweep,
    verify_image,
)
from .protocol import (
    ProtocolReport,
    read_score_file,
    run_protocol,
    split_score_entries,
    write_report_csv,
    write_score_file,
)
from .validation import NumericError
from .whitening import PCAWhitening

__version__ = "0.1.0"

__all__ = [
    "AutoencoderParams",
    "ConvolutionalFeatureExtractor",
    "CorruptBundleError",
    "EmptyDatasetError",
    "FeatureBank",
    "GaConfig",
    "GeneticContrastEnhancer",
    "ModelBundle",
    "NumericError",
    "OneClassGaussian",
    "OptimizeResult",
    "PCAWhitening",
    "PipelineConfig",
    "ProtocolReport",
    "RemapCurve",
    "RocCurve",
    "SampleRecord",
    "SparseAutoencoder",
    "SparsityHyper",
    "SplitPlan",
    "SynthConfig",
    "ThresholdStrategy",
    "TrainReport",
    "UnsupportedVersionError",
    "apply_remap",
    "auc",
    "build_feature_bank",
    "convolve_features",
    "cost",
    "cost_and_gradient",
    "derive_seed",
    "eer",
    "enroll_users",
    "evaluate_bundle",
    "evolve",
    "export_dataset",
    "extract_patches",
    "forward",
    "gradient",
    "init_params",
    "kl_divergence",
    "learn_features",
    "load_bundle",
    "load_config",
    "load_dataset",
    "load_features_text",
    "mean_hidden_activation",
    "mean_pool",
    "minimize_lbfgs",
    "normalize_zero_mean",
    "parse_config",
    "read_score_file",
    "remap_fitness",
    "represent",
    "represent_image",
    "resize_area",
    "roc",
    "run_protocol",
    "sample_patches",
    "save_bundle",
    "save_features_text",
    "select_threshold",
    "sobel_edge_count",
    "split_protocol",
    "split_score_entries",
    "sweep",
    "synthesize_dataset",
    "train_lbfgs",
    "verify_image",
    "write_report_csv",
    "write_score_file",
]
