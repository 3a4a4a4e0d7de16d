# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled union-find kernels.

Signatures and results match ``_pykernels`` exactly; see that module for the
reference description of each algorithm.
"""
import numpy as np
cimport numpy as cnp

from libc.stdlib cimport malloc, free

cnp.import_array()

cdef int DR8[8]
cdef int DC8[8]
DR8[:] = [-1, -1, -1, 0, 0, 1, 1, 1]
DC8[:] = [-1, 0, 1, -1, 1, -1, 0, 1]
cdef int DR4[4]
cdef int DC4[4]
DR4[:] = [-1, 0, 0, 1]
DC4[:] = [0, -1, 1, 0]


cdef inline Py_ssize_t _find(Py_ssize_t* parent, Py_ssize_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def label_components(cnp.uint8_t[:, ::1] mask, int connectivity):
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef Py_ssize_t n = h * w
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    if n == 0:
        return labels_arr, 0
    cdef Py_ssize_t* parent = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef cnp.int32_t* root_label = <cnp.int32_t*> malloc(n * sizeof(cnp.int32_t))
    if parent == NULL or root_label == NULL:
        free(parent); free(root_label)
        raise MemoryError()
    cdef Py_ssize_t r, c, p, q, ra, rb, k, nr, nc
    cdef int count = 0
    cdef int nbrs = 4 if connectivity == 8 else 2
    # prior neighbours in raster order: up-left, up, up-right, left (8) or up, left (4)
    cdef int pdr8[4]
    cdef int pdc8[4]
    cdef int pdr4[2]
    cdef int pdc4[2]
    pdr8[:] = [-1, -1, -1, 0]
    pdc8[:] = [-1, 0, 1, -1]
    pdr4[:] = [-1, 0]
    pdc4[:] = [0, -1]
    with nogil:
        for r in range(h):
            for c in range(w):
                p = r * w + c
                parent[p] = p
                root_label[p] = 0
                if not mask[r, c]:
                    continue
                for k in range(nbrs):
                    if connectivity == 8:
                        nr = r + pdr8[k]
                        nc = c + pdc8[k]
                    else:
                        nr = r + pdr4[k]
                        nc = c + pdc4[k]
                    if nr < 0 or nc < 0 or nc >= w:
                        continue
                    if not mask[nr, nc]:
                        continue
                    q = nr * w + nc
                    ra = _find(parent, p)
                    rb = _find(parent, q)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
        for r in range(h):
            for c in range(w):
                if not mask[r, c]:
                    continue
                p = r * w + c
                ra = _find(parent, p)
                if root_label[ra] == 0:
                    count += 1
                    root_label[ra] = count
                labels[r, c] = root_label[ra]
    free(parent)
    free(root_label)
    return labels_arr, count


cdef inline double _iou(double ax0, double ay0, double ax1, double ay1,
                        double bx0, double by0, double bx1, double by1) noexcept nogil:
    cdef double iw = (ax1 if ax1 < bx1 else bx1) - (ax0 if ax0 > bx0 else bx0)
    cdef double ih = (ay1 if ay1 < by1 else by1) - (ay0 if ay0 > by0 else by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    cdef double inter = iw * ih
    cdef double union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def sweep_best_iou(double[:, ::1] values, double[:, ::1] gt, double[::1] thresholds,
                   int connectivity, bint largest):
    cdef Py_ssize_t h = values.shape[0], w = values.shape[1]
    cdef Py_ssize_t n = h * w
    cdef Py_ssize_t t_count = thresholds.shape[0]
    cdef Py_ssize_t n_gt = gt.shape[0]
    out_arr = np.zeros(t_count, dtype=np.float64)
    cdef double[::1] out = out_arr
    if n == 0 or t_count == 0 or n_gt == 0:
        return out_arr
    flat = np.ascontiguousarray(values).reshape(-1)
    cdef cnp.int64_t[::1] order = np.argsort(-flat, kind="stable").astype(np.int64)
    cdef double[::1] fv = flat

    cdef Py_ssize_t* parent = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* area = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* minidx = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* bx0 = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* by0 = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* bx1 = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* by1 = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* roots = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef char* active = <char*> malloc(n * sizeof(char))
    if (parent == NULL or area == NULL or minidx == NULL or bx0 == NULL or by0 == NULL
            or bx1 == NULL or by1 == NULL or roots == NULL or active == NULL):
        free(parent); free(area); free(minidx); free(bx0); free(by0)
        free(bx1); free(by1); free(roots); free(active)
        raise MemoryError()

    cdef Py_ssize_t i, j, p, q, r, c, nr, nc, ra, rb, big, small, pos = 0, nroots = 0, live
    cdef Py_ssize_t best_root, g
    cdef int k, nbrs = 8 if connectivity == 8 else 4
    cdef double tau, best, v
    with nogil:
        for i in range(n):
            active[i] = 0
        j = t_count - 1
        while j >= 0:
            tau = thresholds[j]
            while pos < n and fv[order[pos]] >= tau:
                p = order[pos]
                pos += 1
                r = p // w
                c = p - r * w
                active[p] = 1
                parent[p] = p
                area[p] = 1
                minidx[p] = p
                bx0[p] = c
                bx1[p] = c + 1
                by0[p] = r
                by1[p] = r + 1
                roots[nroots] = p
                nroots += 1
                for k in range(nbrs):
                    if nbrs == 8:
                        nr = r + DR8[k]
                        nc = c + DC8[k]
                    else:
                        nr = r + DR4[k]
                        nc = c + DC4[k]
                    if nr < 0 or nr >= h or nc < 0 or nc >= w:
                        continue
                    q = nr * w + nc
                    if not active[q]:
                        continue
                    ra = _find(parent, p)
                    rb = _find(parent, q)
                    if ra == rb:
                        continue
                    if area[ra] > area[rb] or (area[ra] == area[rb] and ra < rb):
                        big = ra
                        small = rb
                    else:
                        big = rb
                        small = ra
                    parent[small] = big
                    area[big] += area[small]
                    if minidx[small] < minidx[big]:
                        minidx[big] = minidx[small]
                    if bx0[small] < bx0[big]:
                        bx0[big] = bx0[small]
                    if by0[small] < by0[big]:
                        by0[big] = by0[small]
                    if bx1[small] > bx1[big]:
                        bx1[big] = bx1[small]
                    if by1[small] > by1[big]:
                        by1[big] = by1[small]
            # compact the root list and score this threshold
            live = 0
            best = 0.0
            best_root = -1
            for i in range(nroots):
                ra = roots[i]
                if parent[ra] != ra:
                    continue
                roots[live] = ra
                live += 1
                if largest:
                    if (best_root < 0 or area[ra] > area[best_root]
                            or (area[ra] == area[best_root] and minidx[ra] < minidx[best_root])):
                        best_root = ra
                else:
                    for g in range(n_gt):
                        v = _iou(bx0[ra], by0[ra], bx1[ra], by1[ra],
                                 gt[g, 0], gt[g, 1], gt[g, 2], gt[g, 3])
                        if v > best:
                            best = v
            nroots = live
            if largest and best_root >= 0:
                for g in range(n_gt):
                    v = _iou(bx0[best_root], by0[best_root], bx1[best_root], by1[best_root],
                             gt[g, 0], gt[g, 1], gt[g, 2], gt[g, 3])
                    if v > best:
                        best = v
            out[j] = best
            j -= 1
    free(parent); free(area); free(minidx); free(bx0); free(by0)
    free(bx1); free(by1); free(roots); free(active)
    return out_arr


def felzenszwalb_merge(Py_ssize_t n, cnp.int64_t[::1] edge_a, cnp.int64_t[::1] edge_b,
                       double[::1] weights, double k, Py_ssize_t min_size):
    cdef Py_ssize_t m = edge_a.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    if n == 0:
        return out_arr
    cdef Py_ssize_t* parent = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* size = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef double* internal = <double*> malloc(n * sizeof(double))
    if parent == NULL or size == NULL or internal == NULL:
        free(parent); free(size); free(internal)
        raise MemoryError()
    cdef Py_ssize_t i, a, b, big, small
    cdef double wt, ta, tb
    with nogil:
        for i in range(n):
            parent[i] = i
            size[i] = 1
            internal[i] = 0.0
        for i in range(m):
            a = _find(parent, edge_a[i])
            b = _find(parent, edge_b[i])
            if a == b:
                continue
            wt = weights[i]
            ta = internal[a] + k / size[a]
            tb = internal[b] + k / size[b]
            if wt <= (ta if ta < tb else tb):
                if size[a] > size[b] or (size[a] == size[b] and a < b):
                    big = a
                    small = b
                else:
                    big = b
                    small = a
                parent[small] = big
                size[big] += size[small]
                internal[big] = wt
        if min_size > 1:
            for i in range(m):
                a = _find(parent, edge_a[i])
                b = _find(parent, edge_b[i])
                if a == b:
                    continue
                if size[a] < min_size or size[b] < min_size:
                    if size[a] > size[b] or (size[a] == size[b] and a < b):
                        big = a
                        small = b
                    else:
                        big = b
                        small = a
                    parent[small] = big
                    size[big] += size[small]
        for i in range(n):
            out[i] = _find(parent, i)
    free(parent); free(size); free(internal)
    return out_arr
