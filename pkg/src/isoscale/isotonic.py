"""Interitem isotonic regression and the signed isotonic R^2 family.

For an ordered item pair the focal item ``x`` predicts ``y`` through the best
monotone function of ``x``; the explained share of ``y``'s variance, signed by
the direction of association, is the pairwise coefficient. Averaging a focal
item's coefficients over its comparison items gives its fit score, where low
fit marks an item for review.
"""

from __future__ import annotations

import csv
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import _kernels
from ._stats import pairwise_corr
from .dataset import ResponseMatrix
from .errors import AggregationError, ConfigurationError, DomainError
from .evalrank import LOWER_IS_SUSPICIOUS, ItemScoreVector

NONDECREASING = "nondecreasing"
NONINCREASING = "nonincreasing"

TAU_SIGN_UP_FIT = "tau_sign_up_fit"
TAU_DIRECTED_FIT = "tau_directed_fit"
BIDIRECTIONAL_BEST_FIT = "bidirectional_best_fit"
MODES = (TAU_SIGN_UP_FIT, TAU_DIRECTED_FIT, BIDIRECTIONAL_BEST_FIT)
DEFAULT_MODE = TAU_DIRECTED_FIT

_MODE_CODE = {
    TAU_SIGN_UP_FIT: _kernels.MODE_TAU_UP,
    TAU_DIRECTED_FIT: _kernels.MODE_TAU_DIRECTED,
    BIDIRECTIONAL_BEST_FIT: _kernels.MODE_BIDIRECTIONAL,
}
_MODE_ALIASES = {
    "tau-up": TAU_SIGN_UP_FIT,
    "tau_up": TAU_SIGN_UP_FIT,
    "tau-directed": TAU_DIRECTED_FIT,
    "tau_directed": TAU_DIRECTED_FIT,
    "bidirectional": BIDIRECTIONAL_BEST_FIT,
}

AGGREGATIONS = ("mean", "symmetrized_mean", "trimmed_mean", "median", "absolute_mean")

# columns with more distinct values than this go through the per-pair route
MAX_TABLE_LEVELS = 64


def resolve_mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ConfigurationError(f"unknown signing mode {mode!r}; choose from {', '.join(MODES)}")
    return mode


@dataclass(frozen=True, eq=False)
class IsotonicFit:
    """Least-squares monotone fit of y on x.

    ``fitted`` is aligned with the input order. ``blocks`` lists
    ``(start, end, level)`` for the pooled segments in x-sorted order
    (``end`` exclusive).
    """

    fitted: np.ndarray
    sse: float
    direction: str
    blocks: tuple
    order: np.ndarray = field(repr=False)


class KendallTau(NamedTuple):
    tau_b: float | None
    sign: int


@dataclass(frozen=True)
class SignedPairCoefficient:
    value: float
    r2: float | None
    sign: int
    mode: str
    defined: bool = True


def _check_xy(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DomainError(f"x and y differ in length ({x.size} vs {y.size})")
    if x.size == 0:
        raise DomainError("empty input")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DomainError("non-finite values; filter to pairwise-complete rows first")
    return x, y


def _pava_stack(means, weights):
    """Weighted PAVA for a nondecreasing fit. Returns (level per group, block bounds)."""
    sums, wts, starts = [], [], []
    for g, (m, w) in enumerate(zip(means, weights)):
        sums.append(m * w)
        wts.append(w)
        starts.append(g)
        # merging equal neighbours keeps block levels strictly increasing
        while len(sums) > 1 and sums[-2] / wts[-2] >= sums[-1] / wts[-1]:
            s, w2 = sums.pop(), wts.pop()
            starts.pop()
            sums[-1] += s
            wts[-1] += w2
    levels = np.empty(len(means))
    bounds = []
    for b, st in enumerate(starts):
        end = starts[b + 1] if b + 1 < len(starts) else len(means)
        lev = sums[b] / wts[b]
        levels[st:end] = lev
        bounds.append((st, end, lev))
    return levels, bounds


def pava_fit(x, y, direction: str = NONDECREASING) -> IsotonicFit:
    """Isotonic regression of ``y`` on ``x`` by pool adjacent violators.

    Observations sharing an x value are forced onto one fitted level: they are
    pre-averaged into a weighted group before the sweep. Sorting is stable, so
    the original index breaks ties and block reporting is reproducible.

    Examples
    --------
    >>> pava_fit([1, 2, 3, 4], [1, 3, 2, 4]).fitted
    array([1. , 2.5, 2.5, 4. ])
    """
    if direction not in (NONDECREASING, NONINCREASING):
        raise ValueError(f"unknown direction {direction!r}")
    x, y = _check_xy(x, y)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    counts = np.diff(np.r_[starts, xs.size]).astype(float)
    means = np.add.reduceat(ys, starts) / counts
    sign = 1.0 if direction == NONDECREASING else -1.0
    levels, gbounds = _pava_stack(sign * means, counts)
    levels *= sign
    fitted_sorted = np.repeat(levels, counts.astype(int))
    fitted = np.empty_like(fitted_sorted)
    fitted[order] = fitted_sorted
    edges = np.r_[starts, xs.size]
    blocks = tuple((int(edges[a]), int(edges[b]), float(sign * lev)) for a, b, lev in gbounds)
    resid = y - fitted
    return IsotonicFit(fitted, float(resid @ resid), direction, blocks, order)


def _tss(y):
    if np.all(y == y[0]):
        return None
    d = y - y.mean()
    return float(d @ d)


def isotonic_r2(x, y, direction: str = NONDECREASING) -> float | None:
    """``1 - SSE / TSS`` for the monotone fit, clamped to [0, 1].

    Returns None (undefined) when ``y`` is constant.
    """
    x, y = _check_xy(x, y)
    if x.size < 2:
        raise DomainError("need at least 2 observations")
    tss = _tss(y)
    if tss is None:
        return None
    fit = pava_fit(x, y, direction)
    return float(min(max(1.0 - fit.sse / tss, 0.0), 1.0))


def kendall_tau(x, y) -> KendallTau:
    """Tie-corrected Kendall tau-b and its sign.

    ``tau_b`` is None and ``sign`` is 0 when either margin is constant.
    ``|tau| < 1e-12`` counts as zero for the sign.
    """
    x, y = _check_xy(x, y)
    if x.size < 2:
        raise DomainError("need at least 2 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return KendallTau(None, 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = stats.kendalltau(x, y, variant="b").statistic
    if not np.isfinite(t):
        return KendallTau(None, 0)
    t = float(t)
    sign = 0 if abs(t) < _kernels.TAU_FLOOR else (1 if t > 0 else -1)
    return KendallTau(t, sign)


def signed_iso(x, y, mode: str = DEFAULT_MODE) -> SignedPairCoefficient:
    """Signed isotonic coefficient of ``y`` explained by a monotone function of ``x``.

    Modes
    -----
    tau_sign_up_fit
        R^2 of the nondecreasing fit times sign(tau).
    tau_directed_fit (default)
        Fit in the direction of sign(tau) (nondecreasing when tau is 0) and
        multiply that R^2 by sign(tau). A perfectly inverted pair scores -1.
    bidirectional_best_fit
        Fit both directions; the better one supplies R^2 and the sign.
        When the two SSEs tie the sign comes from tau (+1 if tau is 0).

    A constant ``y`` gives value 0 with ``defined=False``.
    """
    mode = resolve_mode(mode)
    x, y = _check_xy(x, y)
    if x.size < 2:
        raise DomainError("need at least 2 observations")
    tau = kendall_tau(x, y)
    tss = _tss(y)
    if tss is None:
        return SignedPairCoefficient(0.0, None, 0, mode, False)

    def r2_of(sse):
        return float(min(max(1.0 - sse / tss, 0.0), 1.0))

    if mode == TAU_SIGN_UP_FIT:
        r2 = r2_of(pava_fit(x, y, NONDECREASING).sse)
        return SignedPairCoefficient(tau.sign * r2, r2, tau.sign, mode)
    if mode == TAU_DIRECTED_FIT:
        direction = NONDECREASING if tau.sign >= 0 else NONINCREASING
        r2 = r2_of(pava_fit(x, y, direction).sse)
        return SignedPairCoefficient(tau.sign * r2, r2, tau.sign, mode)
    up = pava_fit(x, y, NONDECREASING).sse
    down = pava_fit(x, y, NONINCREASING).sse
    if abs(up - down) <= _kernels.SSE_TIE_RTOL * tss:
        sign = -1 if tau.sign < 0 else 1
    else:
        sign = -1 if up > down else 1
    r2 = r2_of(min(up, down))
    return SignedPairCoefficient(sign * r2, r2, sign, mode)


def bidirectional_mean(x, y) -> float:
    """Average of the bidirectional signed R^2 of y on x and of x on y."""
    a = signed_iso(x, y, BIDIRECTIONAL_BEST_FIT).value
    b = signed_iso(y, x, BIDIRECTIONAL_BEST_FIT).value
    return 0.5 * (a + b)


# --------------------------------------------------------------------------
# neighbour strategies


@dataclass(frozen=True)
class NeighborStrategy:
    """Which comparison items each focal item is scored against.

    kind is one of ``all_pairs``, ``random_k``, ``stratified_by_difficulty``,
    ``correlation_prescreen``; ``k`` is the comparison count for the
    subsampled kinds.
    """

    kind: str = "all_pairs"
    k: int | None = None
    seed: int = 0

    KINDS = ("all_pairs", "random_k", "stratified_by_difficulty", "correlation_prescreen")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NeighborStrategy":
        """Parse ``all``, ``random:K``, ``stratified:K`` or ``prescreen:K``."""
        short = {"all": "all_pairs", "random": "random_k", "stratified": "stratified_by_difficulty",
                 "prescreen": "correlation_prescreen"}
        name, _, arg = text.partition(":")
        kind = short.get(name, name)
        if kind not in cls.KINDS:
            raise ConfigurationError(f"unknown strategy {text!r}")
        if kind == "all_pairs":
            return cls("all_pairs", None, seed)
        try:
            k = int(arg)
        except ValueError:
            raise ConfigurationError(f"strategy {text!r} needs an integer K, e.g. random:10") from None
        return cls(kind, k, seed)

    def mask(self, matrix: ResponseMatrix) -> np.ndarray:
        p = matrix.p
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown strategy {self.kind!r}")
        if self.kind == "all_pairs":
            return ~np.eye(p, dtype=bool)
        k = self.k
        if k is None or k < 1 or k >= p:
            raise ConfigurationError(f"K must satisfy 1 <= K < p (got K={k}, p={p})")
        mask = np.zeros((p, p), dtype=bool)
        if self.kind == "correlation_prescreen":
            r = np.abs(pairwise_corr(matrix.values))
            r = np.where(np.isfinite(r), r, -1.0)
            for i in range(p):
                others = np.array([j for j in range(p) if j != i])
                order = np.lexsort((others, -r[i, others]))
                mask[i, others[order[:k]]] = True
            return mask
        difficulty = np.nanmean(matrix.values, axis=0)
        for i in range(p):
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(i,))))
            others = np.array([j for j in range(p) if j != i])
            if self.kind == "random_k":
                pick = rng.choice(others, size=k, replace=False)
            else:
                strata = np.array_split(others[np.lexsort((others, difficulty[others]))], k)
                pick = np.array([s[rng.integers(s.size)] for s in strata])
            mask[i, pick] = True
        return mask


# --------------------------------------------------------------------------
# pairwise matrix


@dataclass(frozen=True, eq=False)
class PairwiseScoreMatrix:
    """Directed coefficients ``value[i, j]`` = M(i -> j), focal item i predicting j.

    Unpopulated entries and the diagonal are NaN; ``mask`` marks computed pairs.
    """

    item_ids: tuple
    value: np.ndarray
    r2: np.ndarray
    sign: np.ndarray
    defined: np.ndarray
    mask: np.ndarray
    mode: str
    method: str = "m_iso"

    @property
    def p(self) -> int:
        return len(self.item_ids)

    def to_csv(self, path_or_stream) -> None:
        own = isinstance(path_or_stream, (str, os.PathLike))
        fh = open(path_or_stream, "w", newline="", encoding="utf-8") if own else path_or_stream
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["focal_item", "other_item", "value", "r2", "sign", "mode"])
            for i, j in zip(*np.nonzero(self.mask)):
                r2 = self.r2[i, j]
                w.writerow([self.item_ids[i], self.item_ids[j], repr(float(self.value[i, j])),
                            repr(float(r2)) if np.isfinite(r2) else "", int(self.sign[i, j]), self.mode])
        finally:
            if own:
                fh.close()


def _level_table(matrix: ResponseMatrix, max_levels: int):
    """Per-column sorted levels and codes; None for high-cardinality columns."""
    vals = matrix.values
    levels, codes = [], []
    for j in range(matrix.p):
        col = vals[:, j]
        ok = np.isfinite(col)
        lev = np.unique(col[ok])
        if lev.size > max_levels:
            levels.append(None)
            codes.append(None)
            continue
        code = np.full(col.size, -1, dtype=np.int64)
        code[ok] = np.searchsorted(lev, col[ok])
        levels.append(lev)
        codes.append(code)
    return levels, codes


def _generic_pair(vals, i, j, mode):
    x, y = vals[:, i], vals[:, j]
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2:
        return 0.0, np.nan, 0, False
    c = signed_iso(x[ok], y[ok], mode)
    return c.value, (np.nan if c.r2 is None else c.r2), c.sign, c.defined


def pairwise_matrix(matrix: ResponseMatrix, mode: str = DEFAULT_MODE,
                    strategy: NeighborStrategy | None = None, threads: int | None = None,
                    max_levels: int = MAX_TABLE_LEVELS) -> PairwiseScoreMatrix:
    """Signed isotonic coefficients for every selected (focal, other) pair.

    Pairs of columns with at most ``max_levels`` distinct values are evaluated
    from exact cross-tab counts; other pairs go through :func:`signed_iso` on
    their pairwise-complete rows. ``threads`` splits focal items across
    workers; every result lands in a fixed slot so output does not depend on
    scheduling.
    """
    mode = resolve_mode(mode)
    strategy = strategy or NeighborStrategy()
    mask = strategy.mask(matrix)
    p, n = matrix.p, matrix.n
    vals = matrix.values
    value = np.full((p, p), np.nan)
    r2 = np.full((p, p), np.nan)
    sign = np.zeros((p, p), dtype=np.int64)
    defined = np.zeros((p, p), dtype=bool)

    levels, codes = _level_table(matrix, max_levels)
    tab = np.array([lev is not None for lev in levels])
    if tab.any():
        nlev = np.array([0 if lev is None else lev.size for lev in levels], dtype=np.int64)
        col_off = np.r_[0, np.cumsum(nlev)[:-1]].astype(np.int64)
        L = int(nlev.sum())
        onehot = np.zeros((n, L))
        yvals = np.zeros(L)
        for j in np.flatnonzero(tab):
            ok = codes[j] >= 0
            onehot[np.flatnonzero(ok), col_off[j] + codes[j][ok]] = 1.0
            yvals[col_off[j]:col_off[j] + nlev[j]] = levels[j]
        tab_mask = mask & tab[:, None] & tab[None, :]
        focal_all = np.flatnonzero(tab_mask.any(axis=1))
        # chunk focal items so each count block stays small
        chunks, cur, rows = [], [], 0
        for i in focal_all:
            if cur and rows + nlev[i] > 512:
                chunks.append(np.array(cur, dtype=np.int64))
                cur, rows = [], 0
            cur.append(i)
            rows += nlev[i]
        if cur:
            chunks.append(np.array(cur, dtype=np.int64))
        code = _MODE_CODE[mode]

        def run(chunk):
            sel = np.concatenate([np.arange(col_off[i], col_off[i] + nlev[i]) for i in chunk])
            CT = onehot[:, sel].T @ onehot
            focal_row = np.r_[0, np.cumsum(nlev[chunk])[:-1]].astype(np.int64)
            _kernels.fill_pairs(CT, chunk, focal_row, col_off, nlev, yvals, tab_mask, code,
                                value, r2, sign, defined)

        nthreads = threads or 1
        if nthreads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=nthreads) as pool:
                list(pool.map(run, chunks))
        else:
            for ch in chunks:
                run(ch)
    else:
        tab_mask = np.zeros_like(mask)

    rest = mask & ~tab_mask
    for i, j in zip(*np.nonzero(rest)):
        value[i, j], r2[i, j], sign[i, j], defined[i, j] = _generic_pair(vals, i, j, mode)

    np.fill_diagonal(value, np.nan)
    return PairwiseScoreMatrix(matrix.item_ids, value, r2, sign, defined, mask.copy(), mode)


def parse_aggregation(aggregation, trim):
    if isinstance(aggregation, str):
        short = {"sym": "symmetrized_mean", "abs": "absolute_mean", "trimmed": "trimmed_mean"}
        name, _, arg = aggregation.partition(":")
        if "(" in name and name.endswith(")"):
            name, arg = name[:-1].split("(", 1)
        name = short.get(name, name)
        if arg:
            try:
                trim = float(arg)
            except ValueError:
                raise ConfigurationError(f"bad trim fraction in {aggregation!r}") from None
        aggregation = name
    if aggregation not in AGGREGATIONS:
        raise ConfigurationError(f"unknown aggregation {aggregation!r}; choose from {', '.join(AGGREGATIONS)}")
    if aggregation == "trimmed_mean" and not 0.0 <= trim < 0.5:
        raise ConfigurationError(f"trim fraction must be in [0, 0.5), got {trim}")
    return aggregation, trim


def item_fit(pairs: PairwiseScoreMatrix, aggregation: str = "mean", trim: float = 0.1,
             method: str | None = None) -> ItemScoreVector:
    """Aggregate each focal item's coefficients into one fit score (low = suspicious).

    ``mean`` averages M(i -> j) over the populated comparisons.
    ``symmetrized_mean`` first averages M(i -> j) with M(j -> i) where both exist.
    ``trimmed_mean`` cuts ``trim`` of the values from each end; ``median`` and
    ``absolute_mean`` (mean of |M|) are the other robust variants. Pairs with a
    constant target count as 0.
    """
    aggregation, trim = parse_aggregation(aggregation, trim)
    p = pairs.p
    val = np.where(pairs.mask, pairs.value, np.nan)
    if aggregation == "symmetrized_mean":
        both = pairs.mask & pairs.mask.T
        val = np.where(both, 0.5 * (val + val.T), val)
    scores = np.empty(p)
    n_pairs = pairs.mask.sum(axis=1)
    for i in range(p):
        row = val[i, pairs.mask[i]]
        if row.size == 0:
            raise AggregationError(f"item {pairs.item_ids[i]!r} has no populated comparisons")
        if aggregation in ("mean", "symmetrized_mean"):
            scores[i] = row.mean()
        elif aggregation == "absolute_mean":
            scores[i] = np.abs(row).mean()
        elif aggregation == "median":
            scores[i] = np.median(row)
        else:
            scores[i] = stats.trim_mean(row, trim)
    n_undef = (pairs.mask & ~pairs.defined).sum(axis=1)
    name = method or (pairs.method if aggregation == "mean" else f"{pairs.method}:{aggregation}")
    return ItemScoreVector(name, pairs.item_ids, scores, LOWER_IS_SUSPICIOUS,
                           {"n_pairs": n_pairs, "n_undefined_pairs": n_undef, "aggregation": aggregation})


def rest_iso_r2(matrix: ResponseMatrix, item, mode: str = DEFAULT_MODE) -> float:
    """Signed isotonic R^2 of an item explained by its rest score.

    Rows where the item itself is missing are dropped.
    """
    from .restscore import rest_score

    j = matrix.index_of(item)
    rest = rest_score(matrix, j).values
    y = matrix.values[:, j]
    ok = np.isfinite(y)
    return signed_iso(rest[ok], y[ok], mode).value
