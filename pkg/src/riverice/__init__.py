"""Patch-based river ice segmentation tooling.

Water / anchor ice / frazil ice label masks, augmented training patches,
tiled inference, segmentation and ice-concentration metrics, and a small
per-pixel baseline classifier with synthetic test scenes.
"""
from .augment import (
    AugmentParams, Patch, PixelSelection, Policy, augment_image, plan_windows,
    rotate_and_crop, rotation_bands, sample_class_balanced_pixels,
)
from .baseline import (
    ModelParams, TrainConfig, extract_features, load_params, loss_and_grad, predict,
    predict_tiled, save_params, train,
)
from .concentration import (
    ClassSet, ConcentrationVector, VideoConsistency, conc_vector, frame_mae, median_mae,
    temporal_consistency,
)
from .core import (
    ClassId, ConfusionMatrix, MaskEncoding, class_frequencies, confusion, decode_mask,
    encode_mask, read_image, read_mask, write_image, write_mask,
)
from .metrics import ComparisonReport, Direction, SegMetrics, compare, compute_metrics
from .synth import SceneSpec, generate_scene, generate_sequence
from .tiling import TileLayout, stitch, tile

__version__ = "0.1.0"

__all__ = [
    "AugmentParams", "Patch", "PixelSelection", "Policy", "augment_image", "plan_windows",
    "rotate_and_crop", "rotation_bands", "sample_class_balanced_pixels", "ModelParams",
    "TrainConfig", "extract_features", "load_params", "loss_and_grad", "predict",
    "predict_tiled", "save_params", "train", "ClassSet", "ConcentrationVector",
    "VideoConsistency", "conc_vector", "frame_mae", "median_mae", "temporal_consistency",
    "ClassId", "ConfusionMatrix", "MaskEncoding", "class_frequencies", "confusion",
    "decode_mask", "encode_mask", "read_image", "read_mask", "write_image", "write_mask",
    "ComparisonReport", "Direction", "SegMetrics", "compare", "compute_metrics", "SceneSpec",
    "generate_scene", "generate_sequence", "TileLayout", "stitch", "tile",
]
