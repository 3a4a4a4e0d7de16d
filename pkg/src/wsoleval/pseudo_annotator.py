"""Pseudo ground-truth boxes from region proposals and class activation maps.

For proposal sources (Selective Search, RPN) each image goes through three
stages:

1. keep the top fraction of proposals by objectness or classifier score;
2. pointing game: keep the proposals containing the CAM peak;
3. pick the survivor with the highest classifier response.

If stage 2 removes every proposal, stage 3 runs on the stage-1 survivors and
the outcome is flagged. For CLIP-style maps the map is Otsu-thresholded and
the largest box around a connected component is taken.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .formats import BoxRecord
from .geometry import BBox, boxes_from_mask, connected_components, iou
from .heatmap import DegenerateMapError, NormalizedMap, binarize, otsu_threshold
from .proposals.types import ScoredProposal

Source = Literal["ss", "rpn", "clip"]
RankKey = Literal["objectness", "classifier_score"]

# Which score the top-fraction stage ranks by, per proposal source.
DEFAULT_RANK_KEY: dict[str, RankKey] = {"rpn": "objectness", "ss": "classifier_score"}


class AnnotationError(ValueError):
    pass


@dataclass
class ImageRecord:
    image_id: str
    width: int
    height: int
    label: str | int | None = None
    proposals: list[ScoredProposal] | None = None
    cam: NormalizedMap | None = None
    clip_map: NormalizedMap | None = None
    gt_boxes: list[BBox] = field(default_factory=list)


@dataclass
class AnnotationOutcome:
    image_id: str
    source: str
    box: BBox | None
    stage_trace: dict[str, int]
    fallback: str | None = None  # why a stage was bypassed, if one was
    proposal: ScoredProposal | None = None
    error: str | None = None

    def to_record(self) -> BoxRecord:
        p = self.proposal
        trace = dict(self.stage_trace)
        if self.fallback:
            trace["fallback"] = self.fallback
        return BoxRecord(
            image_id=self.image_id,
            box=self.box,
            objectness=None if p is None else p.objectness,
            classifier_score=None if p is None else p.classifier_score,
            source=self.source,
            extra={"stage_trace": trace},
        )


def cam_mean(cam: NormalizedMap, box: BBox) -> float:
    """Mean CAM value over the pixels whose centres lie inside ``box``."""
    h, w = cam.shape
    c0 = max(0, math.ceil(box.x_min - 0.5))
    c1 = min(w, math.ceil(box.x_max - 0.5))
    r0 = max(0, math.ceil(box.y_min - 0.5))
    r1 = min(h, math.ceil(box.y_max - 0.5))
    if c1 <= c0 or r1 <= r0:
        return 0.0
    return float(cam.values[r0:r1, c0:c1].mean())


def _scores(
    proposals: Sequence[ScoredProposal],
    key: RankKey,
    cam: NormalizedMap | None,
) -> list[float]:
    if key == "objectness":
        return [p.objectness for p in proposals]
    if key != "classifier_score":
        raise ValueError(f"unknown ranking key {key!r}")
    if all(p.classifier_score is not None for p in proposals):
        return [p.classifier_score for p in proposals]
    if cam is None:
        raise ValueError("proposals lack classifier scores and no CAM was given to compute them")
    return [cam_mean(cam, p.box) for p in proposals]


def top_fraction_filter(
    proposals: Sequence[ScoredProposal],
    fraction: float = 0.2,
    key: RankKey = "objectness",
    cam: NormalizedMap | None = None,
) -> list[ScoredProposal]:
    """The ``ceil(fraction * n)`` highest-scoring proposals, best first.

    Equal scores keep their input order. ``key="classifier_score"`` uses the
    proposals' own classifier scores, or the mean CAM activation inside each
    box when any is missing.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if not proposals:
        return []
    scores = _scores(proposals, key, cam)
    # round() absorbs float error like 0.7 * 10 = 7.000000000000001
    keep = math.ceil(round(fraction * len(proposals), 9))
    order = sorted(range(len(proposals)), key=lambda i: -scores[i])
    return [proposals[i] for i in order[:keep]]


def pointing_filter(proposals: Sequence[ScoredProposal], cam: NormalizedMap) -> list[ScoredProposal]:
    """Proposals whose box contains the CAM peak pixel."""
    if cam.degenerate:
        raise DegenerateMapError(
            "CAM is constant, so it has no peak; rank the proposals by objectness instead"
        )
    row, col = cam.peak()
    return [p for p in proposals if p.box.contains_pixel(row, col)]


def classifier_rank(
    proposals: Sequence[ScoredProposal],
    cam: NormalizedMap | None = None,
    explicit_scores: Sequence[float] | None = None,
) -> ScoredProposal:
    """Proposal with the highest classifier response.

    The response is, in order of preference, ``explicit_scores``, the
    proposals' own ``classifier_score`` values, or the mean CAM activation in
    the box. Ties go to the larger box, then to the earlier proposal.
    """
    if not proposals:
        raise ValueError("no proposals to rank")
    if explicit_scores is not None:
        if len(explicit_scores) != len(proposals):
            raise ValueError("explicit_scores must match the proposals one to one")
        scores = [float(s) for s in explicit_scores]
    else:
        scores = _scores(proposals, "classifier_score", cam)
    best = min(range(len(proposals)), key=lambda i: (-scores[i], -proposals[i].box.area, i))
    return proposals[best]


def clip_map_to_box(
    nmap: NormalizedMap,
    largest_by: Literal["area", "pixels"] = "area",
    bins: int = 256,
    connectivity: int = 8,
) -> BBox:
    """Otsu-threshold a map and return the largest box around a component.

    ``largest_by="area"`` compares box areas; ``"pixels"`` compares component
    pixel counts. Ties go to the component found first in raster order.
    """
    if nmap.degenerate:
        raise DegenerateMapError("no foreground: constant map")
    mask = binarize(nmap, otsu_threshold(nmap, bins))
    if largest_by == "pixels":
        boxes = boxes_from_mask(mask, "largest", connectivity)
    elif largest_by == "area":
        boxes = boxes_from_mask(mask, "all", connectivity)
        if boxes:
            areas = [b.area for b in boxes]
            boxes = [boxes[int(np.argmax(areas))]]
    else:
        raise ValueError(f"unknown largest_by {largest_by!r}")
    if not boxes:
        raise DegenerateMapError("no foreground after Otsu thresholding")
    return boxes[0]


STAGES = ("ingested", "top_fraction", "pointing", "final")


def _trace(ingested, top, pointing, final) -> dict[str, int]:
    return dict(zip(STAGES, (ingested, top, pointing, final)))


@dataclass
class StageResult:
    """Survivors of each proposal stage for one image."""

    ingested: list[ScoredProposal]
    top_fraction: list[ScoredProposal]
    pointing: list[ScoredProposal]
    final: ScoredProposal
    fallback: str | None = None

    def trace(self) -> dict[str, int]:
        return _trace(len(self.ingested), len(self.top_fraction), len(self.pointing), 1)


def run_stages(
    record: ImageRecord,
    source: Literal["ss", "rpn"],
    fraction: float = 0.2,
    key: RankKey | None = None,
) -> StageResult:
    """Run the three proposal stages and keep every intermediate set.

    When the pointing game removes every proposal, the pointing stage is
    bypassed: its survivors are the top-fraction survivors and ``fallback``
    is ``"pointing-empty"``. A constant or missing CAM likewise bypasses the
    pointing stage (``"degenerate-cam"``, ``"no-cam"``) and the final pick
    falls back to objectness.
    """
    if source not in ("ss", "rpn"):
        raise ValueError(f"unknown proposal source {source!r}")
    proposals = list(record.proposals or [])
    if not proposals:
        raise AnnotationError(f"image {record.image_id!r} has no proposals")
    cam = record.cam
    key = key or DEFAULT_RANK_KEY[source]
    no_map = cam is None or cam.degenerate
    if key == "classifier_score" and no_map and any(p.classifier_score is None for p in proposals):
        key = "objectness"
    top = top_fraction_filter(proposals, fraction, key, cam)

    if cam is None or cam.degenerate:
        best = classifier_rank(top, explicit_scores=[p.objectness for p in top])
        return StageResult(proposals, top, top, best,
                           "degenerate-cam" if cam is not None else "no-cam")
    hits = pointing_filter(top, cam)
    if hits:
        return StageResult(proposals, top, hits, classifier_rank(hits, cam))
    return StageResult(proposals, top, top, classifier_rank(top, cam), "pointing-empty")


def annotate(
    record: ImageRecord,
    source: Source,
    fraction: float = 0.2,
    key: RankKey | None = None,
    largest_by: Literal["area", "pixels"] = "area",
) -> AnnotationOutcome:
    """Produce one pseudo box for an image (see :func:`run_stages`).

    For ``"clip"`` the trace reports the number of Otsu components in place
    of the proposal counts.
    """
    if source == "clip":
        if record.clip_map is None:
            raise AnnotationError(f"image {record.image_id!r} has no CLIP map")
        box = clip_map_to_box(record.clip_map, largest_by)
        n = connected_components(binarize(record.clip_map, otsu_threshold(record.clip_map))).count
        return AnnotationOutcome(record.image_id, source, box, _trace(n, n, n, 1))
    st = run_stages(record, source, fraction, key)
    return AnnotationOutcome(record.image_id, source, st.final.box, st.trace(),
                             fallback=st.fallback, proposal=st.final)


def staged_mean_iou(
    records: Sequence[ImageRecord],
    source: Literal["ss", "rpn"],
    fraction: float = 0.2,
    key: RankKey | None = None,
) -> dict[str, float]:
    """Mean IoU with the reference boxes after each stage.

    Per image, the survivors' IoUs (each against its best-matching reference
    box) are averaged; the stage value is the mean over images that have
    reference boxes.
    """
    per_stage: dict[str, list[float]] = {s: [] for s in STAGES}
    for rec in records:
        if not rec.gt_boxes:
            continue
        st = run_stages(rec, source, fraction, key)
        sets = {"ingested": st.ingested, "top_fraction": st.top_fraction,
                "pointing": st.pointing, "final": [st.final]}
        for stage, props in sets.items():
            vals = [max(iou(p.box, g) for g in rec.gt_boxes) for p in props]
            per_stage[stage].append(math.fsum(vals) / len(vals))
    if not per_stage["final"]:
        raise ValueError("no image has reference boxes")
    return {s: math.fsum(v) / len(v) for s, v in per_stage.items()}


def annotate_dataset(
    records: Sequence[ImageRecord],
    source: Source,
    fraction: float = 0.2,
    key: RankKey | None = None,
    largest_by: Literal["area", "pixels"] = "area",
    threads: int = 1,
) -> tuple[list[AnnotationOutcome], dict]:
    """Annotate every image; failures are reported per image, not raised.

    Outcomes come back sorted by image id, together with a summary of counts
    and the fallback rate.
    """

    def one(rec: ImageRecord) -> AnnotationOutcome:
        try:
            return annotate(rec, source, fraction, key, largest_by)
        except (AnnotationError, DegenerateMapError) as exc:
            return AnnotationOutcome(rec.image_id, source, None, _trace(0, 0, 0, 0), error=str(exc))

    ordered = sorted(records, key=lambda r: r.image_id)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, ordered))
    else:
        outcomes = [one(r) for r in ordered]

    annotated = [o for o in outcomes if o.box is not None]
    fallbacks: dict[str, int] = {}
    for o in annotated:
        if o.fallback:
            fallbacks[o.fallback] = fallbacks.get(o.fallback, 0) + 1
    summary = {
        "source": source,
        "images": len(outcomes),
        "annotated": len(annotated),
        "failed": len(outcomes) - len(annotated),
        "fallbacks": fallbacks,
        "fallback_rate": (sum(fallbacks.values()) / len(annotated)) if annotated else 0.0,
        "errors": [{"image_id": o.image_id, "error": o.error} for o in outcomes if o.error],
    }
    return outcomes, summary
