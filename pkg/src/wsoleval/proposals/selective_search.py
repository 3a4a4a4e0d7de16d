"""Selective Search: greedy hierarchical grouping of superpixels."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..geometry import BBox
from .segmentation import Segmentation, felzenszwalb_segment
from .types import ScoredProposal

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0, 1.0)  # colour, texture, size, fill


@dataclass(frozen=True)
class Region:
    size: int
    box: tuple[float, float, float, float]
    color: np.ndarray
    texture: np.ndarray


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def similarity(a: Region, b: Region, image_area: int, weights: Sequence[float] = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of the colour, texture, size and fill similarities."""
    s_color = _clamp01(float(np.minimum(a.color, b.color).sum()))
    s_texture = _clamp01(float(np.minimum(a.texture, b.texture).sum()))
    s_size = _clamp01(1.0 - (a.size + b.size) / image_area)
    bw = max(a.box[2], b.box[2]) - min(a.box[0], b.box[0])
    bh = max(a.box[3], b.box[3]) - min(a.box[1], b.box[1])
    s_fill = _clamp01(1.0 - (bw * bh - a.size - b.size) / image_area)
    wc, wt, ws, wf = weights
    return wc * s_color + wt * s_texture + ws * s_size + wf * s_fill


def merge(a: Region, b: Region) -> Region:
    n = a.size + b.size
    return Region(
        size=n,
        box=(min(a.box[0], b.box[0]), min(a.box[1], b.box[1]),
             max(a.box[2], b.box[2]), max(a.box[3], b.box[3])),
        color=(a.size * a.color + b.size * b.color) / n,
        texture=(a.size * a.texture + b.size * b.texture) / n,
    )


def initial_regions(seg: Segmentation) -> dict[int, Region]:
    return {
        i + 1: Region(
            size=int(seg.areas[i]),
            box=seg.boxes[i].as_tuple(),
            color=seg.color_hist[i],
            texture=seg.texture_hist[i],
        )
        for i in range(seg.region_count)
    }


def adjacency(labels: np.ndarray) -> set[tuple[int, int]]:
    """Pairs ``(i, j)``, ``i < j``, of regions touching under 8-connectivity."""
    pairs = set()
    h, w = labels.shape
    for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
        r1, c0, c1 = h - dr, max(0, -dc), w - max(0, dc)
        if r1 <= 0 or c1 <= c0:
            continue
        a = labels[:r1, c0:c1].ravel()
        b = labels[dr:dr + r1, c0 + dc:c1 + dc].ravel()
        diff = a != b
        lo = np.minimum(a[diff], b[diff])
        hi = np.maximum(a[diff], b[diff])
        pairs.update(zip(lo.tolist(), hi.tolist()))
    return pairs


SimilarityFn = Callable[[Region, Region], float]


def merge_history(
    regions: dict[int, Region],
    pairs: set[tuple[int, int]],
    sim: SimilarityFn,
) -> list[tuple[int, int, int, Region]]:
    """Greedy grouping: merge the most similar adjacent pair until none remain.

    Ties go to the lexicographically smallest ``(i, j)``. Merged regions get
    fresh ids counting up from ``max(regions) + 1``. Returns
    ``(i, j, new_id, new_region)`` per merge.
    """
    regions = dict(regions)
    neighbours: dict[int, set[int]] = {r: set() for r in regions}
    heap = []
    for i, j in sorted(pairs):
        neighbours[i].add(j)
        neighbours[j].add(i)
        heap.append((-sim(regions[i], regions[j]), i, j))
    heapq.heapify(heap)
    next_id = max(regions) + 1 if regions else 1
    history = []
    while heap:
        _, i, j = heapq.heappop(heap)
        if i not in regions or j not in regions:
            continue
        new = merge(regions.pop(i), regions.pop(j))
        nbrs = (neighbours.pop(i) | neighbours.pop(j)) - {i, j}
        regions[next_id] = new
        neighbours[next_id] = nbrs
        for nb in sorted(nbrs):
            neighbours[nb] -= {i, j}
            neighbours[nb].add(next_id)
            heapq.heappush(heap, (-sim(regions[nb], new), nb, next_id))
        history.append((i, j, next_id, new))
        next_id += 1
    return history


def hierarchical_group(
    seg: Segmentation,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    seed: int = 0,
    sim: SimilarityFn | None = None,
) -> list[ScoredProposal]:
    """Proposals from every initial region and every merge.

    With ``n`` initial regions there are ``2n - 1`` ranks: merges take ranks
    ``n + 1 .. 2n - 1`` in the order they happen, initial regions take a
    seeded random permutation of ``1 .. n``. Objectness is ``rank / (2n - 1)``,
    so later merges score higher. Boxes appearing more than once keep their
    highest objectness. The result is sorted by objectness, highest first.
    """
    h, w = seg.shape
    regions = initial_regions(seg)
    if sim is None:
        image_area = h * w

        def sim(a, b):
            return similarity(a, b, image_area, weights)

    n = len(regions)
    total = 2 * n - 1
    perm = np.random.default_rng(seed).permutation(n)
    ranked: list[tuple[int, tuple]] = [
        (int(perm[i]) + 1, regions[i + 1].box) for i in range(n)
    ]
    history = merge_history(regions, adjacency(seg.labels), sim)
    for t, (_, _, _, region) in enumerate(history, start=1):
        ranked.append((n + t, region.box))

    best: dict[tuple, int] = {}
    for rank, box in ranked:
        if rank > best.get(box, 0):
            best[box] = rank
    out = [
        ScoredProposal(BBox(*box), objectness=rank / total, source="ss")
        for box, rank in best.items()
    ]
    out.sort(key=lambda p: -p.objectness)
    return out


def selective_search(
    image,
    k: float = 300.0,
    min_size: int = 100,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    seed: int = 0,
) -> list[ScoredProposal]:
    return hierarchical_group(felzenszwalb_segment(image, k, min_size), weights, seed)
