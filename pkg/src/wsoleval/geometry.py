"""Bounding-box arithmetic and binary-mask analysis.

Boxes are half-open in pixel coordinates: ``BBox(x0, y0, x1, y1)`` covers
``[x0, x1) x [y0, y1)``, so its area is exactly ``(x1 - x0) * (y1 - y0)`` and
the tight box around pixel column ``c`` spans ``[c, c + 1)``.

Binary masks are plain 2-D numpy boolean arrays indexed ``[row, col]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import _kernels

Connectivity = Literal[4, 8]
BoxMode = Literal["largest", "all"]


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned box with strictly positive area."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = tuple(float(v) for v in (self.x_min, self.y_min, self.x_max, self.y_max))
        for name, v in zip(("x_min", "y_min", "x_max", "y_max"), coords):
            object.__setattr__(self, name, v)  # plain floats, whatever the input type
        if not all(math.isfinite(v) for v in coords):
            raise ValueError(f"non-finite box coordinates: {coords}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"negative box coordinates: {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box (zero area): {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def contains_pixel(self, row: int, col: int) -> bool:
        """True if the centre of pixel ``(row, col)`` lies inside the box."""
        x, y = col + 0.5, row + 0.5
        return self.x_min <= x < self.x_max and self.y_min <= y < self.y_max


@dataclass(frozen=True)
class ComponentLabeling:
    labels: np.ndarray  # int32, 0 = background, components numbered 1..count in raster order
    count: int
    areas: np.ndarray  # areas[i] is the pixel count of label i + 1


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def boxes_to_array(boxes: Sequence[BBox]) -> np.ndarray:
    """Stack boxes into a float64 ``(n, 4)`` array."""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64)


def _check_mask(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if mask.shape[0] <= 0 or mask.shape[1] <= 0:
        raise ValueError(f"mask must have positive dimensions, got {mask.shape}")
    return mask.astype(bool, copy=False)


def connected_components(mask, connectivity: Connectivity = 8) -> ComponentLabeling:
    """Label the foreground components of a binary mask.

    Components are numbered 1..count in the raster order of their first
    pixel. An all-background mask yields ``count == 0``.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity!r}")
    mask = _check_mask(mask)
    labels, count = _kernels.label_components(
        np.ascontiguousarray(mask, dtype=np.uint8), connectivity
    )
    areas = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    return ComponentLabeling(labels=labels, count=int(count), areas=areas)


def _component_boxes(labeling: ComponentLabeling) -> list[BBox]:
    # one box per label, in label order
    if labeling.count == 0:
        return []
    rows, cols = np.nonzero(labeling.labels)
    lab = labeling.labels[rows, cols] - 1
    n = labeling.count
    x0 = np.full(n, np.iinfo(np.int64).max)
    y0 = np.full(n, np.iinfo(np.int64).max)
    x1 = np.full(n, -1)
    y1 = np.full(n, -1)
    np.minimum.at(x0, lab, cols)
    np.minimum.at(y0, lab, rows)
    np.maximum.at(x1, lab, cols)
    np.maximum.at(y1, lab, rows)
    return [
        BBox(float(x0[i]), float(y0[i]), float(x1[i] + 1), float(y1[i] + 1))
        for i in range(n)
    ]


def boxes_from_mask(mask, mode: BoxMode = "largest", connectivity: Connectivity = 8) -> list[BBox]:
    """Tight boxes around the connected components of ``mask``.

    ``"largest"`` returns at most one box, around the component with the most
    pixels (ties go to the smaller label). ``"all"`` returns one box per
    component in label order. An empty mask gives an empty list.
    """
    if mode not in ("largest", "all"):
        raise ValueError(f"unknown box mode {mode!r}")
    labeling = connected_components(mask, connectivity)
    if labeling.count == 0:
        return []
    boxes = _component_boxes(labeling)
    if mode == "all":
        return boxes
    # argmax returns the first maximum, i.e. the smallest label
    return [boxes[int(np.argmax(labeling.areas))]]


def clamp_box(box: BBox | Sequence[float], width: int, height: int) -> BBox:
    """Intersect a box with the image ``[0, width) x [0, height)``.

    If the intersection is empty, a 1x1 box is returned at the in-bounds pixel
    nearest the box's min corner. Accepts raw 4-tuples so callers can clamp
    coordinates that would not form a valid ``BBox`` (e.g. negative ones).
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {width}x{height}")
    x0, y0, x1, y1 = (float(v) for v in (box.as_tuple() if isinstance(box, BBox) else box))
    if not all(math.isfinite(v) for v in (x0, y0, x1, y1)):
        raise ValueError(f"non-finite box coordinates: {(x0, y0, x1, y1)}")
    cx0, cy0 = max(x0, 0.0), max(y0, 0.0)
    cx1, cy1 = min(x1, float(width)), min(y1, float(height))
    if cx0 < cx1 and cy0 < cy1:
        return BBox(cx0, cy0, cx1, cy1)
    px = min(max(math.floor(x0), 0), width - 1)
    py = min(max(math.floor(y0), 0), height - 1)
    return BBox(float(px), float(py), float(px + 1), float(py + 1))


def rasterize(boxes: Sequence[BBox], width: int, height: int) -> np.ndarray:
    """Mask of the pixels whose centres fall inside any of ``boxes``."""
    out = np.zeros((height, width), dtype=bool)
    cols = np.arange(width) + 0.5
    rows = np.arange(height) + 0.5
    for b in boxes:
        cx = (cols >= b.x_min) & (cols < b.x_max)
        ry = (rows >= b.y_min) & (rows < b.y_max)
        out |= ry[:, None] & cx[None, :]
    return out
