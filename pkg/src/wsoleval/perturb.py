"""Noisy reference boxes for robustness studies.

Noise level ``L`` (1..10) bounds every deformation by ``d = 5 L`` percent.
Each box goes through, in order:

1. width and height scaled about the centre by independent factors
   ``1 + u``, ``u ~ U(-d, d)``;
2. centre shifted by ``(sx * w, sy * h)`` of the scaled size,
   ``sx, sy ~ U(-d, d)``;
3. with probability ``p = d``, an area-preserving aspect change: width times
   ``1 + v`` and height divided by ``1 + v``, ``v ~ U(-d, d)``;

then clamped to the image (at least 1x1).

Random numbers: every box draws six doubles from its own PCG64 stream,
seeded with ``SeedSequence([seed, id_lo, id_hi, box_index])`` where
``id_lo``/``id_hi`` are the two little-endian 32-bit halves of the first 8
bytes of ``sha256(image_id)``. The draws are always consumed in the order
``(u_w, u_h, s_x, s_y, p_draw, v)`` whether or not a step applies, so a box's
result depends only on its own key. Level 0 is accepted as a no-op.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .formats import BoxRecord, read_box_file, write_box_file
from .geometry import BBox, clamp_box, iou


@dataclass(frozen=True)
class NoiseSpec:
    level: int
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.level <= 10:
            raise ValueError(f"noise level must be in 1..10 (0 = no noise), got {self.level}")

    @property
    def max_deformation(self) -> float:
        """Deformation bound as a fraction (0.05 per level)."""
        return 0.05 * self.level


def box_rng(seed: int, image_id: str, box_index: int) -> np.random.Generator:
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    lo, hi = int.from_bytes(digest[0:4], "little"), int.from_bytes(digest[4:8], "little")
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, lo, hi, box_index])
    return np.random.Generator(np.random.PCG64(ss))


def perturb_box(
    box: BBox,
    spec: NoiseSpec,
    image_w: int,
    image_h: int,
    rng: np.random.Generator,
    *,
    shift: bool = True,
    aspect: bool = True,
) -> BBox:
    d = spec.max_deformation
    draws = rng.random(6)
    u_w, u_h, s_x, s_y, v = (d * (2.0 * draws[[0, 1, 2, 3, 5]] - 1.0)).tolist()
    p_draw = float(draws[4])
    if d == 0.0:
        return clamp_box(box, image_w, image_h)
    cx, cy = box.center
    w = box.width * (1.0 + u_w)
    h = box.height * (1.0 + u_h)
    if shift:
        cx += s_x * w
        cy += s_y * h
    if aspect and p_draw < d:
        w *= 1.0 + v
        h /= 1.0 + v
    return clamp_box((cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0), image_w, image_h)


def perturb_records(
    records: list[BoxRecord],
    spec: NoiseSpec,
    image_size: tuple[int, int] | None = None,
) -> tuple[list[BoxRecord], dict]:
    """Perturb each record's box; returns the noisy records and a summary."""
    out = []
    counters: dict[str, int] = {}
    ious = []
    for rec in records:
        idx = counters.get(rec.image_id, 0)
        counters[rec.image_id] = idx + 1
        if rec.image_width is not None and rec.image_height is not None:
            w, h = rec.image_width, rec.image_height
        elif image_size is not None:
            w, h = image_size
        else:
            raise ValueError(f"image {rec.image_id!r}: image size unknown; add image_width/image_height")
        noisy = perturb_box(rec.box, spec, w, h, box_rng(spec.seed, rec.image_id, idx))
        ious.append(iou(noisy, rec.box))
        out.append(BoxRecord(
            image_id=rec.image_id, box=noisy, source="noisy",
            image_width=w, image_height=h,
            extra={"noise_level": spec.level},
        ))
    summary = {"seed": spec.seed, "levels": {}}
    if out:
        summary["levels"][str(spec.level)] = {
            "count": len(out),
            "max_deformation": spec.max_deformation,
            "mean_iou": math.fsum(ious) / len(ious),
        }
    return out, summary


def perturb_dataset(in_path, out_path, spec: NoiseSpec, image_size: tuple[int, int] | None = None) -> dict:
    records, _ = read_box_file(in_path)
    noisy, summary = perturb_records(records, spec, image_size)
    write_box_file(out_path, noisy)
    return summary
