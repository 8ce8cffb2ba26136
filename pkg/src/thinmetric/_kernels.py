"""Compiled all-pairs ratio scan.

Only the extreme ratios and their witnesses are kept, so memory stays O(n)
even for ~7e8 pairs.
"""

import math
import os
import warnings

import numba
import numpy as np
from numba import njit, prange

# the TBB layer is optional; numba falls back to omp/workqueue on its own
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

if os.environ.get("THINMETRIC_THREADS"):
    numba.set_num_threads(int(os.environ["THINMETRIC_THREADS"]))


@njit(inline="always", fastmath=False)
def _dist(x, y, i, j, p, w):
    s = 0.0
    if math.isinf(p):
        for c in range(x.shape[1]):
            a = abs(x[i, c] - x[j, c])
            if a > s:
                s = a
        return s
    if p == 1.0:
        for c in range(x.shape[1]):
            s += abs(x[i, c] - x[j, c])
        return s * w
    if p == 2.0:
        for c in range(x.shape[1]):
            a = x[i, c] - x[j, c]
            s += a * a
        return math.sqrt(s * w)
    if p == 4.0:
        for c in range(x.shape[1]):
            a = x[i, c] - x[j, c]
            a = a * a
            s += a * a
        return math.sqrt(math.sqrt(s * w))
    for c in range(x.shape[1]):
        s += abs(x[i, c] - x[j, c]) ** p
    return (s * w) ** (1.0 / p)


@njit(parallel=True, cache=True)
def extreme_ratios(x, y, p_dom, w_dom, p_img, w_img):
    """Per-row max/min of ``d_img(i,j) / d_dom(i,j)`` over ``j > i`` and the arg columns."""
    n = x.shape[0]
    hi = np.full(n, -np.inf)
    lo = np.full(n, np.inf)
    hi_j = np.full(n, -1, dtype=np.int64)
    lo_j = np.full(n, -1, dtype=np.int64)
    for i in prange(n - 1):
        h, l, hj, lj = -np.inf, np.inf, -1, -1
        for j in range(i + 1, n):
            dd = _dist(x, x, i, j, p_dom, w_dom)
            r = _dist(y, y, i, j, p_img, w_img) / dd
            if r > h:
                h, hj = r, j
            if r < l:
                l, lj = r, j
        hi[i], lo[i], hi_j[i], lo_j[i] = h, l, hj, lj
    return hi, hi_j, lo, lo_j
