"""Localization scoring: BoxAcc curves, MaxBoxAcc, mean IoU and the pointing game.

A dataset here is a sequence of :class:`Sample` objects, each pairing a
normalized map with the reference boxes it is scored against. Reference boxes
can come from manual annotation (the oracle) or from a pseudo-annotator;
:func:`eval_measure` picks between them by name.

All dataset aggregates use :func:`math.fsum`, which is exactly rounded and
hence independent of summation order and thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence, Union

import numpy as np

from . import _kernels
from .geometry import BBox, BoxMode, Connectivity, boxes_from_mask, boxes_to_array, iou
from .heatmap import NormalizedMap, ThresholdGrid, binarize, otsu_threshold

Measure = Literal["iou-at-delta", "raw-iou"]
TauPolicy = Union[float, Literal["sweep", "otsu"]]


class MissingAnnotationError(KeyError):
    def __str__(self):
        return str(self.args[0])


@dataclass(frozen=True)
class Sample:
    image_id: str
    nmap: NormalizedMap
    boxes: Sequence[BBox]


@dataclass(frozen=True)
class AnnotatedSample:
    """A map with reference boxes from several annotation sources.

    ``annotations`` maps a source name (``"oracle"``, ``"ss"``, ``"rpn"``,
    ``"clip"``...) to that source's boxes for this image.
    """

    image_id: str
    nmap: NormalizedMap
    annotations: Mapping[str, Sequence[BBox]]

    def sample(self, source: str) -> Sample:
        boxes = self.annotations.get(source)
        if not boxes:
            raise MissingAnnotationError(f"image {self.image_id!r} has no {source!r} boxes")
        return Sample(self.image_id, self.nmap, boxes)


@dataclass(frozen=True)
class BoxAccCurve:
    thresholds: np.ndarray
    acc: np.ndarray
    delta: float
    mode: str
    ious: np.ndarray = field(repr=False)  # (n_images, n_thresholds) best IoU per image

    def at(self, tau: float) -> float:
        idx = np.flatnonzero(self.thresholds == tau)
        if idx.size == 0:
            raise ValueError(f"threshold {tau} is not on the curve's grid")
        return float(self.acc[idx[0]])


@dataclass
class EvalResult:
    tau_star: float | None
    max_box_acc: float
    mean_iou_at_tau: float
    per_image: list[tuple[str, float]]
    delta: float = 0.5
    mode: str = "all"
    tau_policy: str = "sweep"
    hits: list[bool] | None = None

    def to_dict(self) -> dict:
        return {
            "tau_star": self.tau_star,
            "max_box_acc": self.max_box_acc,
            "mean_iou_at_tau": self.mean_iou_at_tau,
            "delta": self.delta,
            "box_mode": self.mode,
            "tau_policy": self.tau_policy,
            "num_images": len(self.per_image),
            "per_image": [{"image_id": i, "iou": v} for i, v in self.per_image],
        }

    def per_image_rows(self) -> list[tuple[str, float, int | str]]:
        hits = self.hits if self.hits is not None else [None] * len(self.per_image)
        return [(i, v, "" if h is None else int(h)) for (i, v), h in zip(self.per_image, hits)]


def image_loc_score(predicted: Sequence[BBox], gt: Sequence[BBox]) -> float:
    """Best IoU over all (predicted, reference) pairs; 0 with no prediction."""
    if not gt:
        raise ValueError("image has no reference boxes")
    if not predicted:
        return 0.0
    return max(iou(p, g) for p in predicted for g in gt)


def _check_dataset(dataset: Sequence[Sample]) -> None:
    if not dataset:
        raise ValueError("dataset is empty")
    for s in dataset:
        if not s.boxes:
            raise ValueError(f"image {s.image_id!r} has no reference boxes")


def image_iou_curve(
    sample: Sample,
    thresholds: np.ndarray,
    mode: BoxMode = "all",
    connectivity: Connectivity = 8,
) -> np.ndarray:
    """Per-threshold :func:`image_loc_score` of the boxes extracted from one map."""
    thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    if thr.size > 1 and np.any(np.diff(thr) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    return _kernels.sweep_best_iou(
        np.ascontiguousarray(sample.nmap.values, dtype=np.float64),
        boxes_to_array(sample.boxes),
        thr,
        connectivity,
        mode == "largest",
    )


def iou_matrix(
    dataset: Sequence[Sample],
    thresholds: np.ndarray,
    mode: BoxMode = "all",
    connectivity: Connectivity = 8,
    threads: int = 1,
) -> np.ndarray:
    _check_dataset(dataset)

    def one(s):
        return image_iou_curve(s, thresholds, mode, connectivity)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, dataset))
    else:
        rows = [one(s) for s in dataset]
    return np.vstack(rows)


def box_acc_curve(
    dataset: Sequence[Sample],
    grid: ThresholdGrid = ThresholdGrid(),
    delta: float = 0.5,
    mode: BoxMode = "all",
    connectivity: Connectivity = 8,
    threads: int = 1,
) -> BoxAccCurve:
    """Fraction of images whose extracted box reaches IoU >= delta, per threshold."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    thresholds = grid.thresholds
    ious = iou_matrix(dataset, thresholds, mode, connectivity, threads)
    acc = (ious >= delta).sum(axis=0) / len(dataset)
    return BoxAccCurve(thresholds=thresholds, acc=acc, delta=delta, mode=mode, ious=ious)


def max_box_acc(curve: BoxAccCurve) -> tuple[float, float]:
    """``(tau_star, acc)`` at the curve maximum; the lowest threshold on ties."""
    j = int(np.argmax(curve.acc))
    return float(curve.thresholds[j]), float(curve.acc[j])


def _image_score_at(sample: Sample, tau: float, mode: BoxMode, connectivity: Connectivity) -> float:
    boxes = boxes_from_mask(binarize(sample.nmap, tau), mode, connectivity)
    return image_loc_score(boxes, sample.boxes)


def image_scores_at(
    dataset: Sequence[Sample], tau: float, mode: BoxMode = "all", connectivity: Connectivity = 8
) -> list[float]:
    _check_dataset(dataset)
    return [_image_score_at(s, tau, mode, connectivity) for s in dataset]


def mean_iou_at(
    dataset: Sequence[Sample], tau: float, mode: BoxMode = "all", connectivity: Connectivity = 8
) -> float:
    """Mean raw IoU of the boxes extracted at a fixed threshold."""
    scores = image_scores_at(dataset, tau, mode, connectivity)
    return math.fsum(scores) / len(scores)


def otsu_image_scores(
    dataset: Sequence[Sample], mode: BoxMode = "all", connectivity: Connectivity = 8, bins: int = 256
) -> list[float]:
    """Per-image IoU with each map binarized at its own Otsu threshold.

    Constant maps have no Otsu threshold and score 0.
    """
    _check_dataset(dataset)
    out = []
    for s in dataset:
        if s.nmap.degenerate:
            out.append(0.0)
            continue
        out.append(_image_score_at(s, otsu_threshold(s.nmap, bins), mode, connectivity))
    return out


@dataclass(frozen=True)
class PointingResult:
    hit: bool
    degenerate: bool = False


def pointing_game(nmap: NormalizedMap, boxes: Sequence[BBox]) -> PointingResult:
    """Hit if the map's peak pixel lies inside any box.

    A constant map has no peak and counts as a flagged miss.
    """
    if not boxes:
        raise ValueError("pointing game needs at least one box")
    if nmap.degenerate:
        return PointingResult(hit=False, degenerate=True)
    row, col = nmap.peak()
    return PointingResult(hit=any(b.contains_pixel(row, col) for b in boxes))


def pointing_accuracy(results: Sequence[PointingResult]) -> float:
    """Hits / (Hits + Misses)."""
    if not results:
        raise ValueError("no pointing results")
    return sum(r.hit for r in results) / len(results)


def _aggregate(scores: Sequence[float], measure: Measure, delta: float) -> float:
    if measure == "iou-at-delta":
        return sum(1 for v in scores if v >= delta) / len(scores)
    if measure == "raw-iou":
        return math.fsum(scores) / len(scores)
    raise ValueError(f"unknown measure {measure!r}")


def eval_measure(
    items: Sequence[AnnotatedSample],
    annotation: str,
    measure: Measure = "iou-at-delta",
    tau_policy: TauPolicy = "sweep",
    delta: float = 0.5,
    grid: ThresholdGrid = ThresholdGrid(),
    mode: BoxMode = "all",
    connectivity: Connectivity = 8,
) -> float:
    """Dataset-level localization measure against one annotation source.

    Averages the per-image similarity between the boxes derived from each map
    and that image's ``annotation`` boxes. ``tau_policy`` decides how boxes
    are derived: a float fixes the threshold (this is also how a
    validation-estimated threshold is applied), ``"sweep"`` takes the best
    single threshold on ``grid`` and ``"otsu"`` thresholds every map on its own.
    """
    dataset = [it.sample(annotation) for it in items]
    if not dataset:
        raise ValueError("dataset is empty")
    if tau_policy == "sweep":
        ious = iou_matrix(dataset, grid.thresholds, mode, connectivity)
        return max(_aggregate(ious[:, j].tolist(), measure, delta) for j in range(ious.shape[1]))
    if tau_policy == "otsu":
        return _aggregate(otsu_image_scores(dataset, mode, connectivity), measure, delta)
    return _aggregate(image_scores_at(dataset, float(tau_policy), mode, connectivity), measure, delta)


def evaluate(
    dataset: Sequence[Sample],
    tau_policy: TauPolicy = "sweep",
    delta: float = 0.5,
    grid: ThresholdGrid = ThresholdGrid(),
    mode: BoxMode = "all",
    connectivity: Connectivity = 8,
    threads: int = 1,
) -> EvalResult:
    """Full evaluation report: BoxAcc, mean IoU and per-image IoU and pointing hits."""
    _check_dataset(dataset)
    if tau_policy == "sweep":
        curve = box_acc_curve(dataset, grid, delta, mode, connectivity, threads)
        tau_star, acc = max_box_acc(curve)
        j = int(np.argmax(curve.acc))
        scores = curve.ious[:, j].tolist()
        policy = "sweep"
    elif tau_policy == "otsu":
        tau_star = None
        scores = otsu_image_scores(dataset, mode, connectivity)
        acc = _aggregate(scores, "iou-at-delta", delta)
        policy = "otsu"
    else:
        tau_star = float(tau_policy)
        scores = image_scores_at(dataset, tau_star, mode, connectivity)
        acc = _aggregate(scores, "iou-at-delta", delta)
        policy = "fixed"
    hits = [pointing_game(s.nmap, s.boxes).hit for s in dataset]
    return EvalResult(
        tau_star=tau_star,
        max_box_acc=acc,
        mean_iou_at_tau=math.fsum(scores) / len(scores),
        per_image=[(s.image_id, v) for s, v in zip(dataset, scores)],
        delta=delta,
        mode=mode,
        tau_policy=policy,
        hits=hits,
    )
