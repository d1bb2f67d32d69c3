"""Pure NumPy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the extension is benchmarked and tested against.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def block_match(image, ex_rows, ex_cols, patch, window, k):
    H, W = image.shape
    half = (window - patch) // 2
    span = window - patch + 1
    patches = sliding_window_view(image, (patch, patch))
    n = ex_rows.shape[0]
    rows = np.empty((n, k), dtype=np.int64)
    cols = np.empty((n, k), dtype=np.int64)
    for g in range(n):
        r, c = int(ex_rows[g]), int(ex_cols[g])
        i0, i1 = max(r - half, 0), min(r - half + span, H - patch + 1)
        j0, j1 = max(c - half, 0), min(c - half + span, W - patch + 1)
        ref = image[r:r + patch, c:c + patch]
        diff = patches[i0:i1, j0:j1] - ref
        dist = np.einsum("abij,abij->ab", diff, diff).ravel()
        ii, jj = np.divmod(np.arange(dist.size), j1 - j0)
        ii += i0
        jj += j0
        self_idx = (r - i0) * (j1 - j0) + (c - j0)
        dist[self_idx] = -1.0
        # lexsort on (raster index, distance): ties resolved in raster order
        order = np.lexsort((np.arange(dist.size), dist))[:k]
        if order.size < k:
            order = np.resize(order, k)
        rows[g] = ii[order]
        cols[g] = jj[order]
    return rows, cols


def aggregate(stack, rows, cols, shape, patch):
    """Sum patch columns back into an image; returns (sums, counts).

    ``stack`` has shape (n, m, k) with m = patch**2 and column j of group g
    placed at ``(rows[g, j], cols[g, j])``.
    """
    H, W = shape
    n, m, k = stack.shape
    da, db = np.divmod(np.arange(m), patch)
    # flat pixel index for every (group, pixel-in-patch, member)
    flat = (rows[:, None, :] + da[None, :, None]) * W + (cols[:, None, :] + db[None, :, None])
    flat = flat.ravel()
    # extended precision so the per-pixel mean of identical copies stays exact
    acc = np.zeros(H * W, dtype=np.longdouble)
    np.add.at(acc, flat, stack.ravel().astype(np.longdouble))
    sums = acc.astype(float).reshape(H, W)
    counts = np.bincount(flat, minlength=H * W).reshape(H, W).astype(float)
    return sums, counts
