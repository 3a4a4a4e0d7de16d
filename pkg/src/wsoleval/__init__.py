"""Evaluation tooling for weakly supervised object localization.

Pseudo ground-truth boxes from region proposals, threshold estimation on a
validation split and IoU-family localization metrics.
"""

from ._kernels import BACKEND
from .geometry import BBox, boxes_from_mask, clamp_box, connected_components, iou
from .heatmap import NormalizedMap, ThresholdGrid, binarize, normalize, otsu_threshold
from .metrics import (
    AnnotatedSample,
    Sample,
    box_acc_curve,
    eval_measure,
    evaluate,
    image_loc_score,
    max_box_acc,
    mean_iou_at,
    pointing_game,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AnnotatedSample",
    "BBox",
    "NormalizedMap",
    "Sample",
    "ThresholdGrid",
    "binarize",
    "box_acc_curve",
    "boxes_from_mask",
    "clamp_box",
    "connected_components",
    "eval_measure",
    "evaluate",
    "image_loc_score",
    "iou",
    "max_box_acc",
    "mean_iou_at",
    "normalize",
    "otsu_threshold",
    "pointing_game",
]
