"""Slow, independent reference implementations used as test oracles.

Nothing here imports from the package under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def tie_groups(x, y):
    """Sorted distinct x values with the y-sum and count of each group."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keys = sorted(set(x.tolist()))
    sums = [float(y[x == k].sum()) for k in keys]
    cnts = [int((x == k).sum()) for k in keys]
    return keys, sums, cnts


def brute_isotonic_sse(x, y, increasing=True):
    """Minimum SSE over all monotone fits by enumerating contiguous partitions.

    Every optimal isotonic fit is piecewise constant on contiguous runs of
    x-groups with each run at its mean, so scanning all 2^(g-1) partitions and
    keeping the feasible ones finds the optimum exactly.
    """
    y = np.asarray(y, dtype=float)
    _, sums, cnts = tie_groups(x, y)
    g = len(sums)
    best = math.inf
    for cuts in itertools.product((False, True), repeat=g - 1):
        bounds = [0] + [k + 1 for k, c in enumerate(cuts) if c] + [g]
        levels = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            levels.append(sum(sums[a:b]) / sum(cnts[a:b]))
        diffs = np.diff(levels)
        if increasing and np.any(diffs < 0):
            continue
        if not increasing and np.any(diffs > 0):
            continue
        fitted = np.empty(len(y))
        xs = np.asarray(x, dtype=float)
        keys = sorted(set(xs.tolist()))
        for bi, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
            for k in keys[a:b]:
                fitted[xs == k] = levels[bi]
        best = min(best, float(((y - fitted) ** 2).sum()))
    return best


def minmax_isotonic(x, y):
    """Nondecreasing fit via the max-min formula over group intervals, O(g^3)."""
    xs = np.asarray(x, dtype=float)
    keys, sums, cnts = tie_groups(x, y)
    g = len(keys)
    lev = np.empty(g)
    for k in range(g):
        lev[k] = max(min(sum(sums[i:j + 1]) / sum(cnts[i:j + 1]) for j in range(k, g)) for i in range(k + 1))
    out = np.empty(xs.size)
    for k, key in enumerate(keys):
        out[xs == key] = lev[k]
    return out


def tau_b(x, y):
    """Kendall tau-b by explicit pair enumeration; None when a margin is constant."""
    n = len(x)
    conc = disc = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = np.sign(x[i] - x[j])
            dy = np.sign(y[i] - y[j])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif dx == dy:
                conc += 1
            else:
                disc += 1
    den = math.sqrt((conc + disc + tx) * (conc + disc + ty))
    return None if den == 0 else (conc - disc) / den


def signed_iso_oracle(x, y, mode="tau_directed_fit"):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tss = float(((y - y.mean()) ** 2).sum())
    if np.all(y == y[0]):
        return 0.0
    t = tau_b(x, y)
    s = 0 if t is None or abs(t) < 1e-12 else int(np.sign(t))
    up = brute_or_minmax(x, y, True)
    down = brute_or_minmax(x, y, False)
    if mode == "tau_sign_up_fit":
        return s * max(0.0, 1 - up / tss)
    if mode == "tau_directed_fit":
        return s * max(0.0, 1 - (up if s >= 0 else down) / tss)
    if abs(up - down) <= 1e-12 * tss:
        sign = -1 if s < 0 else 1
    else:
        sign = -1 if up > down else 1
    return sign * max(0.0, 1 - min(up, down) / tss)


def brute_or_minmax(x, y, increasing):
    y = np.asarray(y, dtype=float)
    if increasing:
        f = minmax_isotonic(x, y)
    else:
        f = -minmax_isotonic(x, -y)
    return float(((y - f) ** 2).sum())


def auc_pairs(bad, good):
    wins = 0.0
    for b in bad:
        for g in good:
            wins += 1.0 if b > g else 0.5 if b == g else 0.0
    return wins / (len(bad) * len(good))


def counts(yi, yj):
    a = b = c = d = 0
    for u, v in zip(yi, yj):
        if u == 1 and v == 1:
            a += 1
        elif u == 1:
            b += 1
        elif v == 1:
            c += 1
        else:
            d += 1
    return a, b, c, d


def kappa(a, b, c, d):
    n = a + b + c + d
    po = (a + d) / n
    pe = ((a + b) * (a + c) + (c + d) * (b + d)) / n ** 2
    return None if pe == 1 else (po - pe) / (1 - pe)


def mutual_info_bits(a, b, c, d):
    n = a + b + c + d
    tab = np.array([[a, b], [c, d]], dtype=float) / n
    r, s = tab.sum(axis=1), tab.sum(axis=0)
    out = 0.0
    for i in range(2):
        for j in range(2):
            if tab[i, j] > 0:
                out += tab[i, j] * math.log2(tab[i, j] / (r[i] * s[j]))
    return out
