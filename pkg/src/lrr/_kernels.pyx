# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled block matching and patch aggregation.

Same contracts as :mod:`lrr._fallback`.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport calloc, malloc, free, qsort

cnp.import_array()


cdef struct Cand:
    double dist
    long idx
    long row
    long col


cdef int _cmp(const void* a, const void* b) noexcept nogil:
    cdef const Cand* x = <const Cand*> a
    cdef const Cand* y = <const Cand*> b
    if x.dist < y.dist:
        return -1
    if x.dist > y.dist:
        return 1
    if x.idx < y.idx:
        return -1
    if x.idx > y.idx:
        return 1
    return 0


def block_match(const double[:, ::1] image, const cnp.int64_t[::1] ex_rows,
                const cnp.int64_t[::1] ex_cols,
                int patch, int window, int k):
    cdef Py_ssize_t H = image.shape[0], W = image.shape[1]
    cdef Py_ssize_t n = ex_rows.shape[0]
    cdef int half = (window - patch) // 2
    cdef int span = window - patch + 1
    cdef cnp.ndarray[cnp.int64_t, ndim=2] rows_arr = np.empty((n, k), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] cols_arr = np.empty((n, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] rows = rows_arr
    cdef cnp.int64_t[:, ::1] cols = cols_arr
    cdef Cand* cands = <Cand*> malloc(span * span * sizeof(Cand))
    if cands == NULL:
        raise MemoryError()
    cdef Py_ssize_t g, i, j, a, b, i0, i1, j0, j1, r, c, nc, t
    cdef double s, d
    try:
        with nogil:
            for g in range(n):
                r = ex_rows[g]
                c = ex_cols[g]
                i0 = r - half
                if i0 < 0:
                    i0 = 0
                i1 = r - half + span
                if i1 > H - patch + 1:
                    i1 = H - patch + 1
                j0 = c - half
                if j0 < 0:
                    j0 = 0
                j1 = c - half + span
                if j1 > W - patch + 1:
                    j1 = W - patch + 1
                nc = 0
                for i in range(i0, i1):
                    for j in range(j0, j1):
                        if i == r and j == c:
                            s = -1.0
                        else:
                            s = 0.0
                            for a in range(patch):
                                for b in range(patch):
                                    d = image[i + a, j + b] - image[r + a, c + b]
                                    s = s + d * d
                        cands[nc].dist = s
                        cands[nc].idx = nc
                        cands[nc].row = i
                        cands[nc].col = j
                        nc = nc + 1
                qsort(cands, nc, sizeof(Cand), _cmp)
                for t in range(k):
                    rows[g, t] = cands[t % nc].row
                    cols[g, t] = cands[t % nc].col
    finally:
        free(cands)
    return rows_arr, cols_arr


def aggregate(const double[:, :, ::1] stack, const cnp.int64_t[:, ::1] rows,
              const cnp.int64_t[:, ::1] cols,
              shape, int patch):
    cdef Py_ssize_t H = shape[0], W = shape[1]
    cdef Py_ssize_t n = stack.shape[0], m = stack.shape[1], k = stack.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sums_arr = np.zeros((H, W), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] counts_arr = np.zeros((H, W), dtype=np.float64)
    cdef double[:, ::1] sums = sums_arr
    cdef double[:, ::1] counts = counts_arr
    # extended-precision accumulator keeps the per-pixel mean exact to ~1e-14
    cdef long double *acc = <long double *> calloc(H * W, sizeof(long double))
    if acc == NULL:
        raise MemoryError()
    cdef Py_ssize_t g, j, p, r, c, idx
    with nogil:
        for g in range(n):
            for j in range(k):
                r = rows[g, j]
                c = cols[g, j]
                for p in range(m):
                    idx = (r + p // patch) * W + c + p % patch
                    acc[idx] += stack[g, p, j]
                    counts[r + p // patch, c + p % patch] += 1.0
        for idx in range(H * W):
            sums[idx // W, idx % W] = <double> acc[idx]
    free(acc)
    return sums_arr, counts_arr
