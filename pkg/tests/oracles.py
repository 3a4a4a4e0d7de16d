"""Independent reference computations used to check the library.

None of these call into the code paths they check: IoU by counting raster
pixels, labeling by recursive flood fill, Otsu by exact-rational variance
recomputation per candidate, BoxAcc by nested loops over scipy's labeling.
"""

import sys
from fractions import Fraction

import numpy as np
from scipy import ndimage

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


def raster_iou(a, b):
    """IoU of integer boxes (x0, y0, x1, y1) by painting pixels."""
    size = int(max(a[2], a[3], b[2], b[3])) + 1
    ga = np.zeros((size, size), dtype=bool)
    gb = np.zeros((size, size), dtype=bool)
    ga[int(a[1]):int(a[3]), int(a[0]):int(a[2])] = True
    gb[int(b[1]):int(b[3]), int(b[0]):int(b[2])] = True
    union = np.count_nonzero(ga | gb)
    return np.count_nonzero(ga & gb) / union


def flood_fill_labels(mask, connectivity):
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=int)
    if connectivity == 8:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]

    def fill(r, c, lab):
        labels[r, c] = lab
        for dr, dc in steps:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not labels[nr, nc]:
                fill(nr, nc, lab)

    count = 0
    for r in range(h):
        for c in range(w):
            if mask[r, c] and not labels[r, c]:
                count += 1
                fill(r, c, count)
    return labels, count


def same_partition(a, b):
    """True if two label grids are equal up to renaming of non-zero labels."""
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    if not np.array_equal(a == 0, b == 0):
        return False
    fwd, back = {}, {}
    for x, y in zip(a.tolist(), b.tolist()):
        if x == 0:
            continue
        if fwd.setdefault(x, y) != y or back.setdefault(y, x) != x:
            return False
    return True


def otsu_brute_force(values, bins=256):
    """Candidate boundary j/bins with the smallest weighted within-class
    variance, each class variance recomputed from scratch in exact rationals."""
    idx = [min(int(v * bins), bins - 1) for v in np.asarray(values, dtype=float).ravel().tolist()]
    hist = {}
    for i in idx:
        hist[i] = hist.get(i, 0) + 1
    occupied = sorted(hist.items())

    def scatter(cls):
        # sum of squared deviations from the class mean: Q - S^2 / n, exactly
        cnt = sum(c for _, c in cls)
        if cnt == 0:
            return None
        s = sum(i * c for i, c in cls)
        q = sum(i * i * c for i, c in cls)
        return Fraction(q * cnt - s * s, cnt)

    best_j, best = None, None
    for j in range(1, bins):
        wb = scatter([(i, c) for i, c in occupied if i < j])
        wf = scatter([(i, c) for i, c in occupied if i >= j])
        if wb is None or wf is None:
            continue
        within = wb + wf  # n times the weighted within-class variance
        if best is None or within < best:
            best_j, best = j, within
    return best_j / bins


def _box_iou(a, b):
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter == 0:
        return 0.0
    return inter / ((a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter)


def boxes_at(values, tau, mode, connectivity=8):
    mask = values >= tau
    structure = np.ones((3, 3)) if connectivity == 8 else None
    lab, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return []
    objs = ndimage.find_objects(lab)
    boxes = [(s[1].start, s[0].start, s[1].stop, s[0].stop) for s in objs]
    if mode == "all":
        return boxes
    sizes = np.bincount(lab.ravel())[1:]
    first = [int(np.flatnonzero(lab.ravel() == k + 1)[0]) for k in range(n)]
    best = max(range(n), key=lambda k: (sizes[k], -first[k]))
    return [boxes[best]]


def nested_loop_ious(dataset, thresholds, mode, connectivity=8):
    """ious[i][j]: best IoU for image i at threshold j, by brute force."""
    out = []
    for s in dataset:
        gts = [b.as_tuple() for b in s.boxes]
        row = []
        for tau in thresholds:
            preds = boxes_at(s.nmap.values, tau, mode, connectivity)
            row.append(max((_box_iou(p, g) for p in preds for g in gts), default=0.0))
        out.append(row)
    return out


def naive_merge_order(regions, pairs, sim, merge):
    """Greedy grouping by rescanning every adjacent pair at each step."""
    regions = dict(regions)
    pairs = set(pairs)
    next_id = max(regions) + 1
    order = []
    while pairs:
        best = None
        for i, j in sorted(pairs):
            s = sim(regions[i], regions[j])
            if best is None or s > best[0]:
                best = (s, i, j)
        _, i, j = best
        new = merge(regions.pop(i), regions.pop(j))
        regions[next_id] = new
        updated = set()
        for a, b in pairs:
            if {a, b} == {i, j}:
                continue
            a2 = next_id if a in (i, j) else a
            b2 = next_id if b in (i, j) else b
            if a2 != b2:
                updated.add((min(a2, b2), max(a2, b2)))
        pairs = updated
        order.append((i, j))
        next_id += 1
    return order
