"""Compiled inner loops for split search."""

import numba
import numpy as np


@numba.njit(cache=True)
def column_segments(e_cols, e_vals, n_rows):
    """Per-column segment starts and whether the column varies within the node."""
    m = e_cols.shape[0]
    n_seg = 0
    for i in range(m):
        if i == 0 or e_cols[i] != e_cols[i - 1]:
            n_seg += 1
    starts = np.empty(n_seg + 1, dtype=np.int64)
    k = 0
    for i in range(m):
        if i == 0 or e_cols[i] != e_cols[i - 1]:
            starts[k] = i
            k += 1
    starts[n_seg] = m
    varies = np.empty(n_seg, dtype=np.bool_)
    for k in range(n_seg):
        a = starts[k]
        b = starts[k + 1]
        varies[k] = (b - a) < n_rows or e_vals[a] != e_vals[b - 1]
    return starts, varies


@numba.njit(cache=True)
def _gain(criterion, W, S, lw, ls):
    rw = W - lw
    rs = S - ls
    if criterion == 0:
        return 2.0 * (S * (W - S) / W - ls * (lw - ls) / lw - rs * (rw - rs) / rw)
    return ls * ls / lw + rs * rs / rw - S * S / W


@numba.njit(cache=True)
def scan_splits(e_rows, e_cols, e_vals, weight, wt, starts, use_col, n_rows, W, S, criterion, min_leaf, tie_rtol):
    """Best (gain, column, threshold) over all cuts between distinct values.

    Implicit zeros of each column form one block placed between its
    negative and positive entries.  A later cut replaces the incumbent only
    when it is better by more than the relative tie tolerance, so ties go
    to the lowest column and then the lowest threshold.
    """
    best_gain = -np.inf
    best_col = -1
    best_thr = 0.0
    n_seg = starts.shape[0] - 1
    for k in range(n_seg):
        a = starts[k]
        b = starts[k + 1]
        col = e_cols[a]
        if not use_col[col]:
            continue
        sw = 0.0
        ss = 0.0
        for i in range(a, b):
            sw += weight[e_rows[i]]
            ss += wt[e_rows[i]]
        zero_done = (b - a) >= n_rows
        zw = W - sw
        zs = S - ss
        lw = 0.0
        ls = 0.0
        prev = 0.0
        has_prev = False
        i = a
        while True:
            if not zero_done and (i == b or e_vals[i] > 0.0):
                v = 0.0
                iw = zw
                i_s = zs
                zero_done = True
                advance = False
            elif i < b:
                v = e_vals[i]
                iw = weight[e_rows[i]]
                i_s = wt[e_rows[i]]
                advance = True
            else:
                break
            if has_prev and v > prev and lw >= min_leaf and W - lw >= min_leaf:
                g = _gain(criterion, W, S, lw, ls)
                if best_col < 0 or g > best_gain + tie_rtol * abs(best_gain):
                    best_gain = g
                    best_col = col
                    thr = prev / 2.0 + v / 2.0
                    if thr >= v:
                        thr = prev
                    best_thr = thr
            lw += iw
            ls += i_s
            prev = v
            has_prev = True
            if advance:
                i += 1
    return best_gain, best_col, best_thr


@numba.njit(cache=True)
def partition(rows, e_rows, e_cols, e_vals, feature, threshold, go_left):
    """Split a node's rows and entries by ``x[feature] <= threshold``; order is preserved."""
    zero_left = 0.0 <= threshold
    for r in rows:
        go_left[r] = zero_left
    for i in range(e_rows.shape[0]):
        if e_cols[i] == feature:
            go_left[e_rows[i]] = e_vals[i] <= threshold
    n_left = 0
    for r in rows:
        if go_left[r]:
            n_left += 1
    m_left = 0
    for i in range(e_rows.shape[0]):
        if go_left[e_rows[i]]:
            m_left += 1
    lrows = np.empty(n_left, dtype=rows.dtype)
    rrows = np.empty(rows.shape[0] - n_left, dtype=rows.dtype)
    a = 0
    b = 0
    for r in rows:
        if go_left[r]:
            lrows[a] = r
            a += 1
        else:
            rrows[b] = r
            b += 1
    m_right = e_rows.shape[0] - m_left
    l_er = np.empty(m_left, dtype=e_rows.dtype)
    l_ec = np.empty(m_left, dtype=e_cols.dtype)
    l_ev = np.empty(m_left, dtype=e_vals.dtype)
    r_er = np.empty(m_right, dtype=e_rows.dtype)
    r_ec = np.empty(m_right, dtype=e_cols.dtype)
    r_ev = np.empty(m_right, dtype=e_vals.dtype)
    a = 0
    b = 0
    for i in range(e_rows.shape[0]):
        if go_left[e_rows[i]]:
            l_er[a] = e_rows[i]
            l_ec[a] = e_cols[i]
            l_ev[a] = e_vals[i]
            a += 1
        else:
            r_er[b] = e_rows[i]
            r_ec[b] = e_cols[i]
            r_ev[b] = e_vals[i]
            b += 1
    return lrows, rrows, l_er, l_ec, l_ev, r_er, r_ec, r_ev


@numba.njit(cache=True)
def apply_csr(indptr, indices, data, feature, threshold, left, right):
    """Leaf reached by every row of a CSR matrix with sorted column indices."""
    n = indptr.shape[0] - 1
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        a = indptr[r]
        b = indptr[r + 1]
        node = 0
        while feature[node] >= 0:
            f = feature[node]
            k = np.searchsorted(indices[a:b], f)
            x = data[a + k] if a + k < b and indices[a + k] == f else 0.0
            node = left[node] if x <= threshold[node] else right[node]
        out[r] = node
    return out
