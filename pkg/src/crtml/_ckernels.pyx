# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Must stay arithmetically identical to ``_pykernels``."""

import numpy as np

from libc.math cimport INFINITY


cdef inline double _combine(double x, double y, Py_ssize_t ni, Py_ssize_t nj, int method) noexcept nogil:
    if method == 1:
        return x if x <= y else y
    if method == 2:
        return y if x <= y else x
    if x <= y:
        return x + (y - x) * (<double>nj / <double>(ni + nj))
    return y + (x - y) * (<double>ni / <double>(ni + nj))


def linkage_merges(const double[:, ::1] dist_in, int method):
    """Naive agglomeration over the upper triangle of a distance matrix.

    Returns an ``(n - 1, 4)`` array of ``(slot_a, slot_b, distance, size)`` rows
    with ``slot_a < slot_b``; the merged cluster keeps ``slot_a``.
    """
    work = np.array(dist_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] dist = work
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t step, i, j, k, ni, nj
    cdef Py_ssize_t bi = 0, bj = 0
    cdef double best, d
    sizes_arr = np.ones(n, dtype=np.intp)
    active_arr = np.ones(n, dtype=np.uint8)
    out_arr = np.empty((max(n - 1, 0), 4), dtype=np.float64)
    cdef Py_ssize_t[::1] sizes = sizes_arr
    cdef unsigned char[::1] active = active_arr
    cdef double[:, ::1] out = out_arr

    with nogil:
        for step in range(n - 1):
            best = INFINITY
            bi = -1
            bj = -1
            for i in range(n):
                if not active[i]:
                    continue
                for j in range(i + 1, n):
                    if active[j] and dist[i, j] < best:
                        best = dist[i, j]
                        bi = i
                        bj = j
            if bi < 0:
                break
            ni = sizes[bi]
            nj = sizes[bj]
            out[step, 0] = bi
            out[step, 1] = bj
            out[step, 2] = best
            out[step, 3] = ni + nj
            for k in range(n):
                if not active[k] or k == bi or k == bj:
                    continue
                d = _combine(dist[k, bi] if k < bi else dist[bi, k],
                             dist[k, bj] if k < bj else dist[bj, k],
                             ni, nj, method)
                if k < bi:
                    dist[k, bi] = d
                else:
                    dist[bi, k] = d
            active[bj] = 0
            sizes[bi] = ni + nj
    if bi < 0 and n > 1:
        raise ValueError("non-finite distances in linkage input")
    return out_arr


def best_split_scan(const double[:, :] X, const Py_ssize_t[::1] y,
                    const Py_ssize_t[:, :] order, const double[::1] table,
                    Py_ssize_t min_leaf):
    """Return ``(feature, position, gain)`` of the best admissible split.

    ``position`` indexes the sorted order of ``feature``: rows ``order[:position + 1]``
    go left. ``feature`` is -1 when no admissible split exists.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t f, i, r, nl, nr, l0, l1, r0, r1, n0, n1 = 0
    cdef Py_ssize_t best_f = -1, best_i = -1
    cdef double parent, child, g, best = -INFINITY

    with nogil:
        for i in range(n):
            n1 += y[i]
        n0 = n - n1
        parent = table[n] - table[n0] - table[n1]
        for f in range(p):
            l1 = 0
            for i in range(n - 1):
                r = order[i, f]
                l1 += y[r]
                nl = i + 1
                nr = n - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                if X[r, f] == X[order[i + 1, f], f]:
                    continue
                l0 = nl - l1
                r1 = n1 - l1
                r0 = nr - r1
                child = (table[nl] - table[l0] - table[l1]) + (table[nr] - table[r0] - table[r1])
                g = (parent - child) / n
                if g > best:
                    best = g
                    best_f = f
                    best_i = i
    return best_f, best_i, best
