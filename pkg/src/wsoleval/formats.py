"""JSONL box files.

Proposals, pseudo boxes and reference boxes share one line format::

    {"image_id": "img_001", "x_min": 10, "y_min": 12, "x_max": 80, "y_max": 96,
     "objectness": 0.91, "classifier_score": null, "source": "rpn"}

Only ``image_id`` and the four coordinates are required for reference boxes.
Optional ``image_width`` / ``image_height`` give the image bounds used for
clamping; pseudo-box files add a ``stage_trace`` object. Rows are written with
a fixed key order so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .geometry import BBox, clamp_box

SOURCES = ("ss", "rpn", "clip", "oracle", "noisy")
_KEY_ORDER = (
    "image_id", "x_min", "y_min", "x_max", "y_max",
    "objectness", "classifier_score", "source", "image_width", "image_height",
)


@dataclass
class BoxRecord:
    image_id: str
    box: BBox
    objectness: float | None = None
    classifier_score: float | None = None
    source: str | None = None
    image_width: int | None = None
    image_height: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        row = {
            "image_id": self.image_id,
            "x_min": self.box.x_min,
            "y_min": self.box.y_min,
            "x_max": self.box.x_max,
            "y_max": self.box.y_max,
        }
        for key in ("objectness", "classifier_score", "source", "image_width", "image_height"):
            value = getattr(self, key)
            if value is not None or key in ("objectness", "classifier_score", "source"):
                row[key] = value
        row.update(self.extra)
        return row


@dataclass(frozen=True)
class RowIssue:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


class IngestionError(ValueError):
    """Itemized report of the rows a box file could not accept."""

    def __init__(self, path, issues: list[RowIssue]):
        self.path = str(path)
        self.issues = list(issues)
        lines = "\n".join(f"  {i}" for i in self.issues[:20])
        more = f"\n  ... {len(self.issues) - 20} more" if len(self.issues) > 20 else ""
        super().__init__(f"{self.path}: {len(self.issues)} invalid row(s)\n{lines}{more}")


def _number(row: dict, key: str, *, required: bool = True):
    value = row.get(key)
    if value is None:
        if required:
            raise ValueError(f"missing {key!r}")
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{key!r} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValueError(f"{key!r} must be finite, got {value!r}")
    return value


def parse_box_row(
    row: dict,
    *,
    require_scores: bool = False,
    image_sizes: dict[str, tuple[int, int]] | None = None,
) -> BoxRecord:
    """Validate one decoded JSON row. Raises ``ValueError`` with the reason."""
    if not isinstance(row, dict):
        raise ValueError("row is not a JSON object")
    image_id = row.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        raise ValueError("missing or empty 'image_id'")
    x0, y0, x1, y1 = (_number(row, k) for k in ("x_min", "y_min", "x_max", "y_max"))
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"degenerate box ({x0}, {y0}, {x1}, {y1})")
    objectness = _number(row, "objectness", required=require_scores)
    if objectness is not None and not 0.0 <= objectness <= 1.0:
        raise ValueError(f"objectness {objectness} outside [0, 1]")
    classifier_score = _number(row, "classifier_score", required=False)
    source = row.get("source")
    if require_scores and source not in ("ss", "rpn", "clip"):
        raise ValueError(f"'source' must be one of ss/rpn/clip, got {source!r}")
    if source is not None and not isinstance(source, str):
        raise ValueError(f"'source' must be a string, got {source!r}")

    width = row.get("image_width")
    height = row.get("image_height")
    if image_sizes and image_id in image_sizes:
        width, height = image_sizes[image_id]
    for key, value in (("image_width", width), ("image_height", height)):
        if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value <= 0):
            raise ValueError(f"{key!r} must be a positive integer, got {value!r}")

    if width is not None and height is not None:
        box = clamp_box((x0, y0, x1, y1), width, height)
    else:
        if x1 <= 0 or y1 <= 0:
            raise ValueError(f"box ({x0}, {y0}, {x1}, {y1}) lies outside the image")
        box = BBox(max(float(x0), 0.0), max(float(y0), 0.0), float(x1), float(y1))

    extra = {k: v for k, v in row.items() if k not in _KEY_ORDER}
    return BoxRecord(
        image_id=image_id,
        box=box,
        objectness=None if objectness is None else float(objectness),
        classifier_score=None if classifier_score is None else float(classifier_score),
        source=source,
        image_width=width,
        image_height=height,
        extra=extra,
    )


def read_box_file(
    path,
    *,
    require_scores: bool = False,
    image_sizes: dict[str, tuple[int, int]] | None = None,
    strict: bool = True,
) -> tuple[list[BoxRecord], list[RowIssue]]:
    """Read a JSONL box file.

    Returns the accepted records and the per-line issues. With ``strict`` any
    issue raises :class:`IngestionError` listing every bad line instead.
    """
    records: list[BoxRecord] = []
    issues: list[RowIssue] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                issues.append(RowIssue(lineno, f"malformed JSON: {exc.msg}"))
                continue
            try:
                records.append(parse_box_row(row, require_scores=require_scores, image_sizes=image_sizes))
            except ValueError as exc:
                issues.append(RowIssue(lineno, str(exc)))
    if strict and issues:
        raise IngestionError(path, issues)
    return records, issues


def write_box_file(path, records: Iterable[BoxRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def group_by_image(records: Iterable[BoxRecord]) -> dict[str, list[BoxRecord]]:
    out: dict[str, list[BoxRecord]] = defaultdict(list)
    for rec in records:
        out[rec.image_id].append(rec)
    return dict(out)


def load_boxes(path) -> dict[str, list[BBox]]:
    """Reference boxes per image id, in file order."""
    records, _ = read_box_file(path)
    return {k: [r.box for r in v] for k, v in group_by_image(records).items()}


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
