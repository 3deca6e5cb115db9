"""Compiled inner loops for the scans.

The 1D candidate family is never materialized: each scale layer is stored as
its sorted grid of endpoints and the pairs are walked in place. All kernels
return both the penalized and the unpenalized maximum since one pass over the
window sums serves both.
"""

import numpy as np
from numba import njit

NO_INDEX = -1


@njit(cache=True, nogil=True)
def _better_1d(v, j, k, bv, bj, bk):
    if v > bv:
        return True
    if v == bv:
        if bj == NO_INDEX or j < bj or (j == bj and k < bk):
            return True
    return False


@njit(cache=True, nogil=True)
def scan_1d(prefix, sqrt_tab, pen_tab, grid, offsets, m_arr, small_len, min_len,
            use_block, blocked):
    """Max of the penalized and unpenalized window statistic over the 1D set.

    Returns (pen_value, pen_start, pen_end, raw_value, raw_start, raw_end, count).
    Ties resolve to the smallest start, then the smallest end.
    """
    n = prefix.shape[0] - 1
    bp = -np.inf
    pj = NO_INDEX
    pk = NO_INDEX
    bu = -np.inf
    uj = NO_INDEX
    uk = NO_INDEX
    count = 0
    for layer in range(m_arr.shape[0]):
        g0 = offsets[layer]
        g1 = offsets[layer + 1]
        m = m_arr[layer]
        two_m = 2.0 * m
        lo = g0
        for a in range(g0, g1):
            j = grid[a]
            if lo <= a:
                lo = a + 1
            while lo < g1 and grid[lo] - j <= m:
                lo += 1
            b = lo
            while b < g1:
                k = grid[b]
                length = k - j
                if length > two_m:
                    break
                b += 1
                if length < min_len:
                    continue
                if use_block and blocked[k] - blocked[j] > 0:
                    continue
                count += 1
                v = (prefix[k] - prefix[j]) / sqrt_tab[length]
                pv = v - pen_tab[length]
                if _better_1d(pv, j, k, bp, pj, pk):
                    bp = pv
                    pj = j
                    pk = k
                if _better_1d(v, j, k, bu, uj, uk):
                    bu = v
                    uj = j
                    uk = k
    first = min_len if min_len > 1 else 1
    for j in range(n):
        top = small_len
        if j + top > n:
            top = n - j
        for length in range(first, top + 1):
            k = j + length
            if use_block and blocked[k] - blocked[j] > 0:
                continue
            count += 1
            v = (prefix[k] - prefix[j]) / sqrt_tab[length]
            pv = v - pen_tab[length]
            if _better_1d(pv, j, k, bp, pj, pk):
                bp = pv
                pj = j
                pk = k
            if _better_1d(v, j, k, bu, uj, uk):
                bu = v
                uj = j
                uk = k
    return bp, pj, pk, bu, uj, uk, count


@njit(cache=True, nogil=True)
def scan_2d(sat, sqrt_tab, pen_tab, j1, j2, k1, k2, use_block, blocked):
    """Same as ``scan_1d`` over an explicit, pre-sorted rectangle list.

    Candidates arrive in tie-break order, so a strict ``>`` keeps the first
    maximizer. Returns (pen_value, pen_index, raw_value, raw_index, count).
    """
    bp = -np.inf
    pi = NO_INDEX
    bu = -np.inf
    ui = NO_INDEX
    count = 0
    for t in range(j1.shape[0]):
        a1 = j1[t]
        a2 = j2[t]
        b1 = k1[t]
        b2 = k2[t]
        if use_block:
            hit = blocked[a2, b2] - blocked[a1, b2] - blocked[a2, b1] + blocked[a1, b1]
            if hit > 0:
                continue
        count += 1
        area = (a2 - a1) * (b2 - b1)
        s = ((sat[a2, b2] - sat[a1, b2]) - sat[a2, b1]) + sat[a1, b1]
        v = s / sqrt_tab[area]
        pv = v - pen_tab[area]
        if pv > bp or pi == NO_INDEX:
            bp = pv
            pi = t
        if v > bu or ui == NO_INDEX:
            bu = v
            ui = t
    return bp, pi, bu, ui, count


@njit(cache=True, nogil=True)
def nearest_1d(n, grid, offsets, m_arr, small_len, min_len, ts, te):
    """Candidate with the smallest overlap distance to (ts, te]."""
    best = 2.0
    bj = NO_INDEX
    bk = NO_INDEX
    tlen = te - ts
    for layer in range(m_arr.shape[0]):
        g0 = offsets[layer]
        g1 = offsets[layer + 1]
        m = m_arr[layer]
        for a in range(g0, g1):
            j = grid[a]
            if j >= te:
                break
            for b in range(a + 1, g1):
                k = grid[b]
                length = k - j
                if length <= m:
                    continue
                if length > 2.0 * m:
                    break
                if length < min_len or k <= ts:
                    continue
                inter = min(k, te) - max(j, ts)
                if inter <= 0:
                    continue
                if j == ts and k == te:
                    d = 0.0
                else:
                    d = 1.0 - inter / np.sqrt(float(length) * float(tlen))
                if _better_1d(-d, j, k, -best, bj, bk):
                    best = d
                    bj = j
                    bk = k
    first = min_len if min_len > 1 else 1
    lo = ts - small_len
    if lo < 0:
        lo = 0
    for j in range(lo, te):
        for length in range(first, small_len + 1):
            k = j + length
            if k > n:
                break
            inter = min(k, te) - max(j, ts)
            if inter <= 0:
                continue
            if j == ts and k == te:
                d = 0.0
            else:
                d = 1.0 - inter / np.sqrt(float(length) * float(tlen))
            if _better_1d(-d, j, k, -best, bj, bk):
                best = d
                bj = j
                bk = k
    return best, bj, bk


@njit(cache=True, nogil=True)
def kahan_cumsum(x):
    out = np.empty(x.shape[0] + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        y = x[i] - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i + 1] = s
    return out
