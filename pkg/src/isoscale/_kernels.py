"""Numba kernels for signed isotonic fits computed from cross-tabulations.

When x takes k distinct levels, the least-squares monotone fit of y on x is
PAVA over the k level groups (group mean, group size), and Kendall's tau
follows from the k x m cross-tab of x levels against y levels. Both are
exact functions of the count table, which is what these kernels consume.
"""

import numpy as np
from numba import njit

MODE_TAU_UP = 0
MODE_TAU_DIRECTED = 1
MODE_BIDIRECTIONAL = 2

TAU_FLOOR = 1e-12
SSE_TIE_RTOL = 1e-12


@njit(cache=True, nogil=True)
def pava_between(means, weights, k, increasing):
    """Weighted PAVA over k group means; returns sum of w * (mean - level)^2."""
    bsum = np.empty(k)
    bw = np.empty(k)
    bstart = np.empty(k, dtype=np.int64)
    top = 0
    for idx in range(k):
        g = idx if increasing else k - 1 - idx
        bsum[top] = means[g] * weights[g]
        bw[top] = weights[g]
        bstart[top] = idx
        top += 1
        while top > 1 and bsum[top - 2] / bw[top - 2] >= bsum[top - 1] / bw[top - 1]:
            bsum[top - 2] += bsum[top - 1]
            bw[top - 2] += bw[top - 1]
            top -= 1
    out = 0.0
    for b in range(top):
        level = bsum[b] / bw[b]
        end = bstart[b + 1] if b + 1 < top else k
        for idx in range(bstart[b], end):
            g = idx if increasing else k - 1 - idx
            d = means[g] - level
            out += weights[g] * d * d
    return out


@njit(cache=True, nogil=True)
def crosstab_signed(C, yv, mode):
    """Signed isotonic coefficient of y on x from the count table ``C``.

    Rows of ``C`` are x levels in ascending order, columns are y levels
    ``yv`` in ascending order. Returns (value, r2, sign, defined, tau).
    ``r2`` and ``tau`` are NaN when undefined.
    """
    kx, ky = C.shape
    W = np.zeros(kx)
    col = np.zeros(ky)
    for g in range(kx):
        for h in range(ky):
            W[g] += C[g, h]
            col[h] += C[g, h]
    N = 0.0
    for g in range(kx):
        N += W[g]

    # Kendall tau-b from the table
    below = np.zeros(ky)
    S = 0.0
    for g in range(kx - 1, -1, -1):
        # below[h] holds counts of rows strictly greater than g with y level h
        tot_below = 0.0
        for h in range(ky):
            tot_below += below[h]
        prefix = 0.0
        for h in range(ky):
            c = C[g, h]
            if c != 0.0:
                disc = prefix
                conc = tot_below - prefix - below[h]
                S += c * (conc - disc)
            prefix += below[h]
        for h in range(ky):
            below[h] += C[g, h]
    n0 = N * (N - 1.0) / 2.0
    tx = 0.0
    for g in range(kx):
        tx += W[g] * (W[g] - 1.0) / 2.0
    ty = 0.0
    nylev = 0
    for h in range(ky):
        ty += col[h] * (col[h] - 1.0) / 2.0
        if col[h] > 0:
            nylev += 1
    denom = (n0 - tx) * (n0 - ty)
    tau = np.nan
    sign = 0
    if denom > 0:
        tau = S / np.sqrt(denom)
        if tau > TAU_FLOOR:
            sign = 1
        elif tau < -TAU_FLOOR:
            sign = -1

    if nylev < 2 or N < 2:
        return 0.0, np.nan, 0, False, tau

    ybar = 0.0
    for h in range(ky):
        ybar += col[h] * yv[h]
    ybar /= N
    tss = 0.0
    for h in range(ky):
        d = yv[h] - ybar
        tss += col[h] * d * d

    means = np.zeros(kx)
    wts = np.zeros(kx)
    k = 0
    within = 0.0
    for g in range(kx):
        if W[g] > 0:
            s = 0.0
            for h in range(ky):
                s += C[g, h] * yv[h]
            m = s / W[g]
            for h in range(ky):
                if C[g, h] != 0.0:
                    d = yv[h] - m
                    within += C[g, h] * d * d
            means[k] = m
            wts[k] = W[g]
            k += 1

    if mode == MODE_TAU_UP:
        sse = within + pava_between(means, wts, k, True)
        r2 = min(max(1.0 - sse / tss, 0.0), 1.0)
        return sign * r2, r2, sign, True, tau
    if mode == MODE_TAU_DIRECTED:
        sse = within + pava_between(means, wts, k, sign >= 0)
        r2 = min(max(1.0 - sse / tss, 0.0), 1.0)
        return sign * r2, r2, sign, True, tau
    up = within + pava_between(means, wts, k, True)
    down = within + pava_between(means, wts, k, False)
    # SSEs within tolerance: fall back to the sign of tau (+1 when tau is 0)
    if abs(up - down) <= SSE_TIE_RTOL * tss:
        s2 = -1 if sign < 0 else 1
    elif up > down:
        s2 = -1
    else:
        s2 = 1
    r2 = min(max(1.0 - min(up, down) / tss, 0.0), 1.0)
    return s2 * r2, r2, s2, True, tau


@njit(cache=True, nogil=True)
def fill_pairs(CT, focal, focal_row, col_off, nlev, yvals, mask, mode,
               out_value, out_r2, out_sign, out_def):
    """Evaluate every masked (focal, other) pair whose count block lives in CT.

    ``CT[focal_row[t] : focal_row[t] + nlev[i], col_off[j] : col_off[j] + nlev[j]]``
    is the cross-tab of focal item ``i = focal[t]`` against item ``j``.
    """
    p = mask.shape[1]
    for t in range(focal.shape[0]):
        i = focal[t]
        r0 = focal_row[t]
        ki = nlev[i]
        for j in range(p):
            if not mask[i, j] or j == i:
                continue
            c0 = col_off[j]
            kj = nlev[j]
            C = CT[r0:r0 + ki, c0:c0 + kj]
            v, r2, s, d, _ = crosstab_signed(C, yvals[c0:c0 + kj], mode)
            out_value[i, j] = v
            out_r2[i, j] = r2
            out_sign[i, j] = s
            out_def[i, j] = d
