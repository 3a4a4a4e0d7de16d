"""Pure-Python union-find kernels.

These are the reference versions of the three hot loops. ``_ckernels`` is a
line-for-line Cython port; both must return identical arrays.

label_components
    Two-pass raster labeling. Labels are assigned in order of each
    component's first pixel in row-major order, so label 1 always holds the
    top-left-most component.

sweep_best_iou
    Best IoU against a set of reference boxes for every threshold of an
    ascending grid, in one pass. Pixels are activated in descending value
    order while walking the grid from the highest threshold down, so the
    active set at threshold t is exactly ``{values >= t}``. Components grow
    by union-find and carry their area, first pixel index and tight box.

felzenszwalb_merge
    Graph-based segmentation merge loop over pre-sorted edges, followed by
    the small-region cleanup pass.
"""

import numpy as np

_PRIOR8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1))
_PRIOR4 = ((-1, 0), (0, -1))
_NBR8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_NBR4 = ((-1, 0), (0, -1), (0, 1), (1, 0))


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def label_components(mask, connectivity):
    mask = np.asarray(mask)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    if h * w == 0:
        return labels, 0
    bits = mask.astype(bool).ravel().tolist()
    parent = list(range(h * w))
    prior = _PRIOR8 if connectivity == 8 else _PRIOR4
    for r in range(h):
        for c in range(w):
            p = r * w + c
            if not bits[p]:
                continue
            for dr, dc in prior:
                nr, nc = r + dr, c + dc
                if nr < 0 or nc < 0 or nc >= w:
                    continue
                q = nr * w + nc
                if not bits[q]:
                    continue
                ra, rb = _find(parent, p), _find(parent, q)
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
    root_label = {}
    flat = labels.reshape(-1)
    for p in range(h * w):
        if not bits[p]:
            continue
        ra = _find(parent, p)
        lab = root_label.get(ra)
        if lab is None:
            lab = len(root_label) + 1
            root_label[ra] = lab
        flat[p] = lab
    return labels, len(root_label)


def _iou(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def sweep_best_iou(values, gt, thresholds, connectivity, largest):
    values = np.ascontiguousarray(values, dtype=np.float64)
    h, w = values.shape
    n = h * w
    thresholds = np.asarray(thresholds, dtype=np.float64).tolist()
    gt_boxes = [tuple(float(x) for x in row) for row in np.asarray(gt, dtype=np.float64)]
    out = np.zeros(len(thresholds), dtype=np.float64)
    if n == 0 or not thresholds or not gt_boxes:
        return out
    flat = values.reshape(-1)
    order = np.argsort(-flat, kind="stable").tolist()
    fv = flat.tolist()
    nbrs = _NBR8 if connectivity == 8 else _NBR4

    active = [False] * n
    parent = [0] * n
    area = [0] * n
    minidx = [0] * n
    box = [None] * n
    roots = []
    pos = 0
    for j in range(len(thresholds) - 1, -1, -1):
        tau = thresholds[j]
        while pos < n and fv[order[pos]] >= tau:
            p = order[pos]
            pos += 1
            r, c = divmod(p, w)
            active[p] = True
            parent[p] = p
            area[p] = 1
            minidx[p] = p
            box[p] = [c, r, c + 1, r + 1]
            roots.append(p)
            for dr, dc in nbrs:
                nr, nc = r + dr, c + dc
                if nr < 0 or nr >= h or nc < 0 or nc >= w:
                    continue
                q = nr * w + nc
                if not active[q]:
                    continue
                ra, rb = _find(parent, p), _find(parent, q)
                if ra == rb:
                    continue
                if area[ra] > area[rb] or (area[ra] == area[rb] and ra < rb):
                    big, small = ra, rb
                else:
                    big, small = rb, ra
                parent[small] = big
                area[big] += area[small]
                minidx[big] = min(minidx[big], minidx[small])
                bb, sb = box[big], box[small]
                bb[0] = min(bb[0], sb[0])
                bb[1] = min(bb[1], sb[1])
                bb[2] = max(bb[2], sb[2])
                bb[3] = max(bb[3], sb[3])
        roots = [ra for ra in roots if parent[ra] == ra]
        best = 0.0
        if largest:
            if roots:
                top = min(roots, key=lambda ra: (-area[ra], minidx[ra]))
                best = max(_iou(box[top], g) for g in gt_boxes)
        else:
            for ra in roots:
                for g in gt_boxes:
                    v = _iou(box[ra], g)
                    if v > best:
                        best = v
        out[j] = best
    return out


def felzenszwalb_merge(n, edge_a, edge_b, weights, k, min_size):
    ea = np.asarray(edge_a).tolist()
    eb = np.asarray(edge_b).tolist()
    ws = np.asarray(weights, dtype=np.float64).tolist()
    parent = list(range(n))
    size = [1] * n
    internal = [0.0] * n

    def join(a, b):
        if size[a] > size[b] or (size[a] == size[b] and a < b):
            big, small = a, b
        else:
            big, small = b, a
        parent[small] = big
        size[big] += size[small]
        return big

    for a0, b0, wt in zip(ea, eb, ws):
        a, b = _find(parent, a0), _find(parent, b0)
        if a == b:
            continue
        if wt <= min(internal[a] + k / size[a], internal[b] + k / size[b]):
            internal[join(a, b)] = wt
    if min_size > 1:
        for a0, b0 in zip(ea, eb):
            a, b = _find(parent, a0), _find(parent, b0)
            if a != b and (size[a] < min_size or size[b] < min_size):
                join(a, b)
    return np.array([_find(parent, i) for i in range(n)], dtype=np.int64)
