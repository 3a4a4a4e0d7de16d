"""Graph-based image segmentation (Felzenszwalb & Huttenlocher) and region features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import _kernels
from ..geometry import BBox

COLOR_BINS = 25
TEXTURE_ORIENTATIONS = 8
TEXTURE_BINS = 10

# 8-neighbour graph without duplicates: right, down-left, down, down-right
_EDGE_OFFSETS = ((0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class Segmentation:
    labels: np.ndarray  # int32 (H, W), regions numbered 1..region_count in raster order
    region_count: int
    areas: np.ndarray
    boxes: list[BBox]
    color_hist: np.ndarray  # (n, 3 * COLOR_BINS), each row L1-normalized
    texture_hist: np.ndarray  # (n, 3 * TEXTURE_ORIENTATIONS * TEXTURE_BINS), L1-normalized

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


def as_rgb(image) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    if arr.ndim != 3 or arr.shape[2] not in (3, 4):
        raise ValueError(f"expected an RGB image, got shape {arr.shape}")
    arr = arr[..., :3]
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("empty image")
    return arr.astype(np.float64)


def pixel_graph(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """8-neighbour edges sorted by weight, ties by source pixel then direction."""
    h, w, _ = rgb.shape
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    srcs, dsts, wts, dirs = [], [], [], []
    for d, (dr, dc) in enumerate(_EDGE_OFFSETS):
        r0, r1 = 0, h - dr
        c0, c1 = max(0, -dc), w - max(0, dc)
        if r1 <= r0 or c1 <= c0:
            continue
        a = idx[r0:r1, c0:c1]
        b = idx[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        diff = rgb[r0:r1, c0:c1] - rgb[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        srcs.append(a.ravel())
        dsts.append(b.ravel())
        wts.append(np.sqrt((diff * diff).sum(axis=-1)).ravel())
        dirs.append(np.full(a.size, d, dtype=np.int64))
    if not srcs:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    src, dst, wt, dr_ = (np.concatenate(x) for x in (srcs, dsts, wts, dirs))
    order = np.lexsort((dr_, src, wt))
    return (np.ascontiguousarray(src[order]), np.ascontiguousarray(dst[order]),
            np.ascontiguousarray(wt[order]))


def _relabel_raster(roots: np.ndarray) -> tuple[np.ndarray, int]:
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # rank unique roots by first occurrence so labels follow raster order
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return (rank[inverse] + 1).astype(np.int32), int(first.size)


def _color_features(rgb: np.ndarray) -> np.ndarray:
    bins = np.clip((rgb * COLOR_BINS / 256.0).astype(np.int64), 0, COLOR_BINS - 1)
    return bins + np.arange(3) * COLOR_BINS  # (H, W, 3) global bin ids


def _texture_features(rgb: np.ndarray) -> np.ndarray:
    """Per pixel, per channel and orientation, the bin id of the oriented
    Gaussian-derivative response (sigma 1, positive part, scaled per channel)."""
    h, w, _ = rgb.shape
    out = np.empty((h, w, 3, TEXTURE_ORIENTATIONS), dtype=np.int64)
    angles = np.arange(TEXTURE_ORIENTATIONS) * (2 * np.pi / TEXTURE_ORIENTATIONS)
    for ch in range(3):
        dx = ndimage.gaussian_filter(rgb[..., ch], sigma=1.0, order=(0, 1))
        dy = ndimage.gaussian_filter(rgb[..., ch], sigma=1.0, order=(1, 0))
        resp = np.maximum(0.0, np.cos(angles) * dx[..., None] + np.sin(angles) * dy[..., None])
        peak = resp.max()
        if peak > 0:
            resp = resp / peak
        b = np.clip((resp * TEXTURE_BINS).astype(np.int64), 0, TEXTURE_BINS - 1)
        out[:, :, ch, :] = b + (ch * TEXTURE_ORIENTATIONS + np.arange(TEXTURE_ORIENTATIONS)) * TEXTURE_BINS
    return out


def _region_hist(labels0: np.ndarray, feature_ids: np.ndarray, n: int, nbins: int) -> np.ndarray:
    per_pixel = feature_ids.reshape(labels0.size, -1)
    k = per_pixel.shape[1]
    keys = np.repeat(labels0.ravel(), k) * nbins + per_pixel.ravel()
    hist = np.bincount(keys, minlength=n * nbins).reshape(n, nbins).astype(np.float64)
    return hist / hist.sum(axis=1, keepdims=True)


def region_features(rgb: np.ndarray, labels: np.ndarray, n: int) -> Segmentation:
    """Area, box and colour/texture histograms for a dense labeling."""
    labels0 = labels - 1
    areas = np.bincount(labels0.ravel(), minlength=n)
    rows, cols = np.indices(labels.shape)
    x0 = np.full(n, labels.shape[1]); y0 = np.full(n, labels.shape[0])
    x1 = np.zeros(n, dtype=np.int64); y1 = np.zeros(n, dtype=np.int64)
    np.minimum.at(x0, labels0.ravel(), cols.ravel())
    np.minimum.at(y0, labels0.ravel(), rows.ravel())
    np.maximum.at(x1, labels0.ravel(), cols.ravel() + 1)
    np.maximum.at(y1, labels0.ravel(), rows.ravel() + 1)
    boxes = [BBox(float(x0[i]), float(y0[i]), float(x1[i]), float(y1[i])) for i in range(n)]
    color = _region_hist(labels0, _color_features(rgb), n, 3 * COLOR_BINS)
    texture = _region_hist(
        labels0, _texture_features(rgb), n, 3 * TEXTURE_ORIENTATIONS * TEXTURE_BINS
    )
    return Segmentation(labels, n, areas, boxes, color, texture)


def felzenszwalb_segment(image, k: float = 300.0, min_size: int = 100) -> Segmentation:
    """Segment an RGB image into superpixels.

    Edges join 8-neighbours with the Euclidean RGB distance as weight and are
    merged in ascending order when the weight does not exceed
    ``min(Int(C1) + k/|C1|, Int(C2) + k/|C2|)``. Afterwards, regions smaller
    than ``min_size`` are absorbed through their lowest-weight edge.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if min_size < 1:
        raise ValueError(f"min_size must be at least 1, got {min_size}")
    rgb = as_rgb(image)
    h, w, _ = rgb.shape
    src, dst, wt = pixel_graph(rgb)
    roots = _kernels.felzenszwalb_merge(h * w, src, dst, wt, float(k), int(min_size))
    flat, n = _relabel_raster(roots)
    return region_features(rgb, flat.reshape(h, w), n)
