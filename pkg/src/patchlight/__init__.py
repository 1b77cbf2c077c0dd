"""Adverse-condition image enhancement with hierarchical patch critics.

A residual generator guided by illumination attention brightens and
cleans degraded photographs; training pits it against patch critics at
scene, object, and texture scales, with ranked window pairing aligning
the patches the critics compare.
"""

from .errors import (
    BoundsError,
    CheckpointError,
    ConfigError,
    DataError,
    EmptyDatasetError,
    GeometryError,
    NumericError,
    ParameterError,
    PatchlightError,
    UsageError,
)
from .image_core import ImageBuffer, PatchRegion, RandomState, crop, load_image, save_image
from .siam import attention_from_image, build_pyramid, illumination
from .patch_hierarchy import HierarchySpec, sample_hierarchy
from .rawp import SearchSpec, find_best_match, pairing_score
from .enhancement_model import (
    DiscriminatorConfig,
    GeneratorConfig,
    MaskGenerator,
    PatchCritic,
    build_critics,
    build_generator,
    enhance,
    enhance_with_model,
    generate_mask,
)
from .adversarial_losses import LossReport, LossWeights, total_loss
from .quality_metrics import MetricReport, evaluate_pairs, psnr, ssim
from .dataset_ingest import PairManifest, load_pair, scan
from .trainer import (
    TrainConfig,
    TrainState,
    init_state,
    load_checkpoint,
    run,
    save_checkpoint,
    train_step,
)
from .ablation import run_ablation

__version__ = "0.1.0"

__all__ = [
    "ImageBuffer",
    "PatchRegion",
    "RandomState",
    "crop",
    "load_image",
    "save_image",
    "illumination",
    "attention_from_image",
    "build_pyramid",
    "HierarchySpec",
    "sample_hierarchy",
    "SearchSpec",
    "find_best_match",
    "pairing_score",
    "GeneratorConfig",
    "DiscriminatorConfig",
    "MaskGenerator",
    "PatchCritic",
    "build_generator",
    "build_critics",
    "generate_mask",
    "enhance",
    "enhance_with_model",
    "LossWeights",
    "LossReport",
    "total_loss",
    "MetricReport",
    "evaluate_pairs",
    "ssim",
    "psnr",
    "PairManifest",
    "scan",
    "load_pair",
    "TrainConfig",
    "TrainState",
    "init_state",
    "train_step",
    "run",
    "save_checkpoint",
    "load_checkpoint",
    "run_ablation",
    "PatchlightError",
    "UsageError",
    "ParameterError",
    "BoundsError",
    "GeometryError",
    "DataError",
    "EmptyDatasetError",
    "ConfigError",
    "CheckpointError",
    "NumericError",
    "__version__",
]
