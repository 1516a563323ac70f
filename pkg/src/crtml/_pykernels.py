"""Numpy implementations of the hot loops.

Same contracts and the same floating-point expression order as the compiled
module, so either backend produces bitwise-equal results.
"""

import numpy as np


def _combine(x, y, ni, nj, method):
    if method == 1:
        return np.minimum(x, y)
    if method == 2:
        return np.maximum(x, y)
    wj = nj / (ni + nj)
    wi = ni / (ni + nj)
    with np.errstate(invalid="ignore"):  # inf - inf on retired slots, masked out by the caller
        return np.where(x <= y, x + (y - x) * wj, y + (x - y) * wi)


def linkage_merges(dist, method):
    n = dist.shape[0]
    out = np.empty((max(n - 1, 0), 4), dtype=np.float64)
    if n < 2:
        return out
    idx = np.arange(n)
    upper = np.where(idx[:, None] < idx[None, :], dist, np.inf)
    sizes = np.ones(n, dtype=np.intp)
    active = np.ones(n, dtype=bool)
    for step in range(n - 1):
        flat = int(np.argmin(upper))
        bi, bj = divmod(flat, n)
        best = upper[bi, bj]
        if not np.isfinite(best):
            raise ValueError("non-finite distances in linkage input")
        ni, nj = int(sizes[bi]), int(sizes[bj])
        out[step] = (bi, bj, best, ni + nj)

        to_i = np.where(idx < bi, upper[:, bi], upper[bi, :])
        to_j = np.where(idx < bj, upper[:, bj], upper[bj, :])
        keep = active & (idx != bi) & (idx != bj)
        new = _combine(to_i, to_j, ni, nj, method)
        below = keep & (idx < bi)
        above = keep & (idx > bi)
        upper[below, bi] = new[below]
        upper[bi, above] = new[above]

        upper[bj, :] = np.inf
        upper[:, bj] = np.inf
        active[bj] = False
        sizes[bi] = ni + nj
    return out


def best_split_scan(X, y, order, table, min_leaf):
    n, p = X.shape
    if n < 2:
        return -1, -1, -np.inf
    n1 = int(y.sum())
    n0 = n - n1
    parent = table[n] - table[n0] - table[n1]

    xs = np.take_along_axis(X, order, axis=0)
    left1 = np.cumsum(y[order], axis=0)[:-1]
    nl = np.arange(1, n)[:, None]
    nr = n - nl
    left0 = nl - left1
    right1 = n1 - left1
    right0 = nr - right1
    child = (table[nl] - table[left0] - table[left1]) + (table[nr] - table[right0] - table[right1])
    gain = (parent - child) / n

    valid = (xs[:-1] != xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    # feature-major flattening: first maximum = lowest feature, then lowest threshold
    flat = int(np.argmax(gain.T.ravel()))
    f, i = divmod(flat, n - 1)
    best = float(gain[i, f])
    if best == -np.inf:
        return -1, -1, best
    return f, i, best
