"""Item-rest and item-drop statistics.

Covers rest scores, item-rest association, Cronbach's alpha and its
leave-one-out change, the change in mean interitem correlation, and Mokken's
item scalability H_i.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._stats import mutual_information_bits, pairwise_corr
from .contingency import binary_counts
from .dataset import ResponseMatrix
from .errors import DimensionError, DomainError
from .evalrank import LOWER_IS_SUSPICIOUS, ItemScoreVector

ITEM_REST_STATS = ("pearson", "z_mokken", "mutual_information")


@dataclass(frozen=True, eq=False)
class RestScore:
    values: np.ndarray
    excluded_item: int
    missing_per_row: np.ndarray = field(repr=False, default=None)


def rest_score(matrix: ResponseMatrix, item) -> RestScore:
    """Row sums over every item except ``item``; missing cells add 0."""
    i = matrix.index_of(item)
    vals = np.delete(matrix.values, i, axis=1)
    miss = (~np.isfinite(vals)).sum(axis=1)
    return RestScore(np.nansum(vals, axis=1), i, miss)


def _equal_frequency_bins(x, max_bins=10):
    distinct = np.unique(x)
    nb = min(max_bins, distinct.size)
    if nb <= 1:
        return np.zeros(x.size, dtype=int)
    if distinct.size <= max_bins:
        return np.searchsorted(distinct, x)
    edges = np.unique(np.quantile(x, np.linspace(0, 1, nb + 1))[1:-1])
    return np.searchsorted(edges, x, side="right")


def item_rest_stat(matrix: ResponseMatrix, item, stat: str = "pearson") -> float | None:
    """Association between one item and the rest of the test.

    pearson
        Corr(X_i, X_-i) over rows where the item is observed.
    z_mokken
        sqrt(N - 1) * sum_j Cov(X_i, X_j) / sqrt(sum_j Var(X_i) Var(X_j)),
        each term over pairwise-complete rows.
    mutual_information
        MI in bits between the item and its rest score, the rest score cut
        into at most 10 equal-frequency bins.

    Returns None when a variance involved is zero.
    """
    i = matrix.index_of(item)
    y = matrix.values[:, i]
    ok = np.isfinite(y)
    if stat == "pearson":
        x = rest_score(matrix, i).values[ok]
        yy = y[ok]
        if yy.size < 3:
            raise DimensionError("pearson item-rest needs n >= 3")
        if np.all(x == x[0]) or np.all(yy == yy[0]):
            return None
        return float(np.clip(np.corrcoef(yy, x)[0, 1], -1.0, 1.0))
    if stat == "z_mokken":
        num = den = 0.0
        n_min = matrix.n
        for j in range(matrix.p):
            if j == i:
                continue
            xj = matrix.values[:, j]
            both = ok & np.isfinite(xj)
            if both.sum() < 2:
                continue
            a, b = y[both], xj[both]
            n_min = min(n_min, int(both.sum()))
            cov = np.cov(a, b, ddof=1)
            num += cov[0, 1]
            den += cov[0, 0] * cov[1, 1]
        if den <= 0:
            return None
        return float(np.sqrt(n_min - 1) * num / np.sqrt(den))
    if stat == "mutual_information":
        x = rest_score(matrix, i).values[ok]
        yy = y[ok]
        if np.all(x == x[0]) or np.all(yy == yy[0]):
            return None
        return mutual_information_bits(yy, _equal_frequency_bins(x))
    raise ValueError(f"unknown item-rest statistic {stat!r}; choose from {', '.join(ITEM_REST_STATS)}")


def item_rest_scores(matrix: ResponseMatrix, stat: str = "pearson") -> ItemScoreVector:
    vals = [item_rest_stat(matrix, i, stat) for i in range(matrix.p)]
    scores = np.array([np.nan if v is None else v for v in vals])
    return ItemScoreVector(f"{stat}_rest", matrix.item_ids, scores, LOWER_IS_SUSPICIOUS)


def _alpha(vals: np.ndarray) -> float | None:
    k = vals.shape[1]
    total_var = np.var(vals.sum(axis=1), ddof=1)
    if not total_var > 0:
        return None
    item_var = np.var(vals, axis=0, ddof=1).sum()
    return float(k / (k - 1) * (1.0 - item_var / total_var))


def cronbach_alpha(matrix: ResponseMatrix) -> float | None:
    """Cronbach's alpha with n - 1 variances, on rows with no missing cell.

    None when the total score has zero variance.
    """
    vals = matrix.values
    vals = vals[np.isfinite(vals).all(axis=1)]
    if vals.shape[0] < 2:
        return None
    return _alpha(vals)


def alpha_drop(matrix: ResponseMatrix) -> ItemScoreVector:
    """alpha(full) - alpha(without item i); very negative means removing i helps."""
    if matrix.p < 3:
        raise DimensionError("alpha_drop needs at least 3 items")
    vals = matrix.values
    vals = vals[np.isfinite(vals).all(axis=1)]
    full = _alpha(vals) if vals.shape[0] >= 2 else None
    scores = np.full(matrix.p, np.nan)
    undefined = []
    for i in range(matrix.p):
        red = _alpha(np.delete(vals, i, axis=1)) if vals.shape[0] >= 2 else None
        if full is None or red is None:
            undefined.append(matrix.item_ids[i])
            continue
        scores[i] = full - red
    return ItemScoreVector("alpha_drop", matrix.item_ids, scores, LOWER_IS_SUSPICIOUS,
                           {"undefined": tuple(undefined)})


def _mean_offdiag(r: np.ndarray) -> tuple:
    iu = np.triu_indices(r.shape[0], 1)
    v = r[iu]
    ok = np.isfinite(v)
    return (float(v[ok].mean()) if ok.any() else np.nan), int((~ok).sum())


def mean_corr_drop(matrix: ResponseMatrix) -> ItemScoreVector:
    """Mean off-diagonal correlation of the full test minus that without item i."""
    if matrix.p < 3:
        raise DimensionError("mean_corr_drop needs at least 3 items")
    r = pairwise_corr(matrix.values)
    full, n_undef = _mean_offdiag(r)
    scores = np.empty(matrix.p)
    for i in range(matrix.p):
        keep = np.delete(np.arange(matrix.p), i)
        scores[i] = full - _mean_offdiag(r[np.ix_(keep, keep)])[0]
    return ItemScoreVector("mean_corr_drop", matrix.item_ids, scores, LOWER_IS_SUSPICIOUS,
                           {"n_undefined_pairs": n_undef})


def loevinger_item(matrix: ResponseMatrix) -> ItemScoreVector:
    """Mokken item scalability H_i as a ratio of sums over partners j.

    H_i = sum_j (ad - bc) / sum_j Cov_max, with Cov_max (in counts)
    min[(a+b)(b+d), (a+c)(c+d)], the largest ad - bc the margins allow.
    """
    if not matrix.is_binary:
        raise DomainError("loevinger_item needs binary items")
    a, b, c, d = binary_counts(matrix.values)
    num = a * d - b * c
    den = np.minimum((a + b) * (b + d), (a + c) * (c + d))
    np.fill_diagonal(num, 0.0)
    np.fill_diagonal(den, 0.0)
    tot_num, tot_den = num.sum(axis=1), den.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(tot_den > 0, tot_num / tot_den, np.nan)
    return ItemScoreVector("loevinger_hi", matrix.item_ids, scores, LOWER_IS_SUSPICIOUS)


def write_item_stats(scores: ItemScoreVector, path) -> None:
    """CSV with columns item_id, statistic, value, defined."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item_id", "statistic", "value", "defined"])
        for i, s in zip(scores.item_ids, scores.scores):
            ok = bool(np.isfinite(s))
            w.writerow([i, scores.method, repr(float(s)) if ok else "", int(ok)])
