"""2x2 contingency counts and a registry of closed-form binary association measures.

Cell convention for an ordered item pair (i, j)::

              j = 1   j = 0
    i = 1       a       b
    i = 0       c       d

Every measure is a vectorised function of ``(a, b, c, d)`` that returns NaN
exactly where its formula is undefined (a vanishing denominator, the log of
zero, ...). Scalar lookups through :func:`pair_measure` turn that NaN into
None, and the item-level aggregators skip and count such pairs. Logarithms
are base 2 unless a formula says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import ResponseMatrix
from .errors import AggregationError, DomainError, RegistryError
from .evalrank import HIGHER_IS_SUSPICIOUS, LOWER_IS_SUSPICIOUS, ItemScoreVector


@dataclass(frozen=True)
class ContingencyCounts:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise DomainError("contingency counts must be nonnegative")

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    def transpose(self) -> "ContingencyCounts":
        return ContingencyCounts(self.a, self.c, self.b, self.d)


def contingency_counts(yi, yj) -> ContingencyCounts:
    """Cell counts for two binary vectors over their pairwise-complete rows."""
    yi = np.asarray(yi, dtype=float)
    yj = np.asarray(yj, dtype=float)
    if yi.shape != yj.shape:
        raise DomainError("vectors differ in length")
    ok = np.isfinite(yi) & np.isfinite(yj)
    yi, yj = yi[ok], yj[ok]
    if yi.size == 0:
        raise DomainError("no pairwise-complete rows")
    for v in (yi, yj):
        if not np.all((v == 0) | (v == 1)):
            raise DomainError("contingency measures need binary (0/1) items; "
                              "use the isotonic module for ordinal or continuous pairs")
    i1, j1 = yi == 1, yj == 1
    return ContingencyCounts(int((i1 & j1).sum()), int((i1 & ~j1).sum()),
                             int((~i1 & j1).sum()), int((~i1 & ~j1).sum()))


def binary_counts(values: np.ndarray):
    """All-pairs cell counts for a binary matrix, as four p x p arrays.

    ``a[i, j]`` counts rows with item i = 1 and item j = 1, restricted to rows
    where both are observed.
    """
    values = np.asarray(values, dtype=float)
    obs = np.isfinite(values)
    one = (obs & (values == 1)).astype(float)
    zero = (obs & (values == 0)).astype(float)
    return one.T @ one, one.T @ zero, zero.T @ one, zero.T @ zero


# --------------------------------------------------------------------------
# formula helpers


def _div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return np.where(den != 0, out, np.nan)


def _haldane(a, b, c, d):
    """Add 0.5 to every cell of tables with exactly one zero cell."""
    zeros = (a == 0).astype(int) + (b == 0) + (c == 0) + (d == 0)
    adj = np.where(zeros == 1, 0.5, 0.0)
    return a + adj, b + adj, c + adj, d + adj


def _xlogx_ratio(p, q):
    with np.errstate(invalid="ignore", divide="ignore"):
        t = p * np.log2(p / q)
    return np.where(p > 0, t, 0.0)


def _binary_entropy(k, n):
    p = _div(k, n)
    p = np.where(np.isfinite(p), p, 0.0)
    return -(_xlogx_ratio(p, 1.0) + _xlogx_ratio(1.0 - p, 1.0))


def _mi(a, b, c, d):
    n = a + b + c + d
    pi1, pj1 = _div(a + b, n), _div(a + c, n)
    pi0, pj0 = 1.0 - pi1, 1.0 - pj1
    out = (_xlogx_ratio(_div(a, n), pi1 * pj1) + _xlogx_ratio(_div(b, n), pi1 * pj0)
           + _xlogx_ratio(_div(c, n), pi0 * pj1) + _xlogx_ratio(_div(d, n), pi0 * pj0))
    return np.where(n > 0, np.maximum(out, 0.0), np.nan)


def _phi(a, b, c, d):
    return _div(a * d - b * c, np.sqrt((a + b) * (c + d) * (a + c) * (b + d)))


def _kappa(a, b, c, d):
    n = a + b + c + d
    po = _div(a + d, n)
    pe = _div((a + b) * (a + c) + (c + d) * (b + d), n * n)
    return _div(po - pe, 1.0 - pe)


def _loevinger(a, b, c, d):
    return _div(a * d - b * c, np.minimum((a + b) * (b + d), (a + c) * (c + d)))


def _yule_q(a, b, c, d):
    a, b, c, d = _haldane(a, b, c, d)
    return _div(a * d - b * c, a * d + b * c)


def _yule_w(a, b, c, d):
    a, b, c, d = _haldane(a, b, c, d)
    s, t = np.sqrt(a * d), np.sqrt(b * c)
    return _div(s - t, s + t)


def _odds_ratio(a, b, c, d):
    a, b, c, d = _haldane(a, b, c, d)
    return _div(a * d, b * c)


def _tetrachoric(a, b, c, d):
    # cos(pi / (1 + sqrt(OR))) written as cos(pi * sqrt(bc) / (sqrt(ad) + sqrt(bc)))
    # so that OR = 0 and OR = inf map to -1 and +1
    a, b, c, d = _haldane(a, b, c, d)
    s, t = np.sqrt(a * d), np.sqrt(b * c)
    return np.cos(np.pi * _div(t, s + t))


def _pmi(a, b, c, d):
    n = a + b + c + d
    ratio = _div(a * n, (a + c) * (a + b))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.log2(ratio)
    return np.where(ratio > 0, out, np.nan)


def _u_sym(a, b, c, d):
    n = a + b + c + d
    return _div(2.0 * _mi(a, b, c, d), _binary_entropy(a + b, n) + _binary_entropy(a + c, n))


def _theil_u(a, b, c, d):
    # share of item j's entropy explained by item i
    n = a + b + c + d
    return _div(_mi(a, b, c, d), _binary_entropy(a + c, n))


def _stiles(a, b, c, d):
    n = a + b + c + d
    ratio = _div(n * (np.abs(a * d - b * c) - n / 2.0) ** 2, (a + b) * (c + d) * (a + c) * (b + d))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.log10(ratio)
    return np.where(ratio > 0, out, np.nan)


def _symmetric_h(a, b, c, d):
    n = a + b + c + d
    pi, pj = _div(a + b, n), _div(a + c, n)
    return 1.0 - _div(_div(b + c, n), 2 * pi * (1 - pj) + 2 * pj * (1 - pi))


def _a_from_phi(a, b, c, d):
    ph = _phi(a, b, c, d)
    return _div(1.7 * ph, np.sqrt(np.clip(1.0 - ph * ph, 0.0, None)))


@dataclass(frozen=True)
class Measure:
    """A registry entry.

    ``signed`` measures can go below zero (no association sits at 0 or,
    for ratio measures, at 1); ``bounds`` is the closed value range when one
    exists.
    """

    name: str
    formula: str
    fn: Callable
    symmetric: bool = True
    signed: bool = False
    bounds: tuple | None = None
    label: str = ""
    orientation: str = LOWER_IS_SUSPICIOUS

    def __call__(self, a, b, c, d):
        a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
        return self.fn(a, b, c, d)


def _n(a, b, c, d):
    return a + b + c + d


_ENTRIES = [
    # Table-1 interitem rows
    Measure("acc", "a/n", lambda a, b, c, d: _div(a, _n(a, b, c, d)), bounds=(0, 1), label="P(both correct)"),
    Measure("f1", "2a/(2a+b+c)", lambda a, b, c, d: _div(2 * a, 2 * a + b + c), bounds=(0, 1),
            label="harmonic mean of P(j|i) and P(i|j)"),
    Measure("smc", "(a+d)/n", lambda a, b, c, d: _div(a + d, _n(a, b, c, d)), bounds=(0, 1),
            label="simple matching"),
    Measure("mi", "H(i)+H(j)-H(i,j) [bits]", _mi, bounds=(0, 1), label="mutual information"),
    Measure("phi", "(ad-bc)/sqrt((a+b)(c+d)(a+c)(b+d))", _phi, signed=True, bounds=(-1, 1),
            label="phi / Matthews"),
    Measure("tetrachoric", "cos(pi/(1+sqrt(ad/bc)))", _tetrachoric, signed=True, bounds=(-1, 1),
            label="tetrachoric (approx.)"),
    Measure("kappa", "(po-pe)/(1-pe); po=(a+d)/n, pe=((a+b)(a+c)+(c+d)(b+d))/n^2", _kappa, signed=True,
            bounds=(-1, 1), label="Cohen's kappa"),
    Measure("u_sym", "2 MI/(H(i)+H(j))", _u_sym, bounds=(0, 1), label="symmetric uncertainty"),
    # intersection based
    Measure("jaccard", "a/(a+b+c)", lambda a, b, c, d: _div(a, a + b + c), bounds=(0, 1)),
    Measure("dice", "2a/(2a+b+c)", lambda a, b, c, d: _div(2 * a, 2 * a + b + c), bounds=(0, 1)),
    Measure("weighted_jaccard", "3a/(3a+b+c)", lambda a, b, c, d: _div(3 * a, 3 * a + b + c), bounds=(0, 1)),
    Measure("overlap", "a/min(a+b,a+c)", lambda a, b, c, d: _div(a, np.minimum(a + b, a + c)), bounds=(0, 1)),
    Measure("cosine", "a/sqrt((a+b)(a+c))", lambda a, b, c, d: _div(a, np.sqrt((a + b) * (a + c))),
            bounds=(0, 1), label="Ochiai"),
    Measure("kulczynski1", "a/(b+c)", lambda a, b, c, d: _div(a, b + c)),
    Measure("kulczynski2", "(a/(a+b)+a/(a+c))/2",
            lambda a, b, c, d: 0.5 * (_div(a, a + b) + _div(a, a + c)), bounds=(0, 1)),
    Measure("forbes", "n a/((a+b)(a+c))", lambda a, b, c, d: _div(_n(a, b, c, d) * a, (a + b) * (a + c))),
    Measure("russell_rao", "a/n", lambda a, b, c, d: _div(a, _n(a, b, c, d)), bounds=(0, 1)),
    Measure("sokal_sneath1", "a/(a+2(b+c))", lambda a, b, c, d: _div(a, a + 2 * (b + c)), bounds=(0, 1)),
    Measure("braun_blanquet", "a/max(a+b,a+c)", lambda a, b, c, d: _div(a, np.maximum(a + b, a + c)),
            bounds=(0, 1)),
    Measure("mountford", "2a/(a(b+c)+2bc)", lambda a, b, c, d: _div(2 * a, a * (b + c) + 2 * b * c)),
    Measure("sorgenfrei", "a^2/((a+b)(a+c))", lambda a, b, c, d: _div(a * a, (a + b) * (a + c)), bounds=(0, 1)),
    Measure("precision", "a/(a+b)", lambda a, b, c, d: _div(a, a + b), symmetric=False, bounds=(0, 1)),
    Measure("recall", "a/(a+c)", lambda a, b, c, d: _div(a, a + c), symmetric=False, bounds=(0, 1)),
    # agreement based
    Measure("sokal_michener", "(a+d)/n", lambda a, b, c, d: _div(a + d, _n(a, b, c, d)), bounds=(0, 1)),
    Measure("rogers_tanimoto", "(a+d)/(a+d+2(b+c))", lambda a, b, c, d: _div(a + d, a + d + 2 * (b + c)),
            bounds=(0, 1)),
    Measure("hamann", "((a+d)-(b+c))/n", lambda a, b, c, d: _div(a + d - b - c, _n(a, b, c, d)), signed=True,
            bounds=(-1, 1)),
    Measure("sokal_sneath2", "2(a+d)/(2(a+d)+b+c)", lambda a, b, c, d: _div(2 * (a + d), 2 * (a + d) + b + c),
            bounds=(0, 1)),
    Measure("sokal_sneath3", "(a+d)/(b+c)", lambda a, b, c, d: _div(a + d, b + c)),
    Measure("faith", "(a+0.5d)/n", lambda a, b, c, d: _div(a + 0.5 * d, _n(a, b, c, d)), bounds=(0, 1)),
    Measure("gower", "(a+d)/sqrt((a+b)(a+c)(b+d)(c+d))",
            lambda a, b, c, d: _div(a + d, np.sqrt((a + b) * (a + c) * (b + d) * (c + d)))),
    Measure("rogot_goldberg", "a/(2a+b+c)+d/(2d+b+c)",
            lambda a, b, c, d: _div(a, 2 * a + b + c) + _div(d, 2 * d + b + c), bounds=(0, 1)),
    Measure("hamming_similarity", "1-(b+c)/n", lambda a, b, c, d: 1.0 - _div(b + c, _n(a, b, c, d)),
            bounds=(0, 1)),
    # distance derived
    Measure("normalized_euclidean", "1-sqrt((b+c)/n)",
            lambda a, b, c, d: 1.0 - np.sqrt(_div(b + c, _n(a, b, c, d))), bounds=(0, 1)),
    Measure("canberra", "1-(b/(a+b)+c/(a+c))/2",
            lambda a, b, c, d: 1.0 - 0.5 * (_div(b, a + b) + _div(c, a + c)), bounds=(0, 1)),
    Measure("size_difference", "1-(b+c)^2/n^2",
            lambda a, b, c, d: 1.0 - _div((b + c) ** 2, _n(a, b, c, d) ** 2), bounds=(0, 1)),
    Measure("pattern_difference", "1-4bc/n^2",
            lambda a, b, c, d: 1.0 - _div(4 * b * c, _n(a, b, c, d) ** 2), bounds=(0, 1)),
    Measure("austin_colwell", "(2/pi) asin(sqrt((a+d)/n))",
            lambda a, b, c, d: 2.0 / np.pi * np.arcsin(np.sqrt(_div(a + d, _n(a, b, c, d)))), bounds=(0, 1)),
    Measure("hellinger", "1-sqrt((b/(a+b)+c/(a+c))/2)",
            lambda a, b, c, d: 1.0 - np.sqrt(0.5 * (_div(b, a + b) + _div(c, a + c))), bounds=(0, 1)),
    Measure("baroni_urbani_buser", "(sqrt(ad)+a)/(sqrt(ad)+a+b+c)",
            lambda a, b, c, d: _div(np.sqrt(a * d) + a, np.sqrt(a * d) + a + b + c), bounds=(0, 1)),
    # covariance and correlation
    Measure("yule_q", "(ad-bc)/(ad+bc)", _yule_q, signed=True, bounds=(-1, 1)),
    Measure("yule_w", "(sqrt(ad)-sqrt(bc))/(sqrt(ad)+sqrt(bc))", _yule_w, signed=True, bounds=(-1, 1)),
    Measure("odds_ratio", "ad/bc", _odds_ratio),
    Measure("dispersion", "(ad-bc)/n^2", lambda a, b, c, d: _div(a * d - b * c, _n(a, b, c, d) ** 2),
            signed=True, bounds=(-0.25, 0.25)),
    Measure("determinant", "ad-bc", lambda a, b, c, d: a * d - b * c, signed=True),
    Measure("kendall_tau_a", "(ad-bc)/(n(n-1)/2)",
            lambda a, b, c, d: _div(a * d - b * c, _n(a, b, c, d) * (_n(a, b, c, d) - 1) / 2), signed=True,
            bounds=(-1, 1)),
    Measure("kendall_tau_b", "(ad-bc)/sqrt((a+b)(c+d)(a+c)(b+d))", _phi, signed=True, bounds=(-1, 1)),
    Measure("cramers_v", "|phi|", lambda a, b, c, d: np.abs(_phi(a, b, c, d)), bounds=(0, 1)),
    Measure("tarwid", "(na-(a+b)(a+c))/(na+(a+b)(a+c))",
            lambda a, b, c, d: _div(_n(a, b, c, d) * a - (a + b) * (a + c), _n(a, b, c, d) * a + (a + b) * (a + c)),
            signed=True, bounds=(-1, 1)),
    Measure("mcconnaughey", "(a^2-bc)/sqrt((a+b)(a+c))",
            lambda a, b, c, d: _div(a * a - b * c, np.sqrt((a + b) * (a + c))), signed=True),
    Measure("stiles", "log10(n(|ad-bc|-n/2)^2/((a+b)(c+d)(a+c)(b+d)))", _stiles, signed=True),
    # information theoretic
    Measure("pmi", "log2(a n/((a+b)(a+c)))", _pmi, signed=True),
    Measure("theil_u", "MI/H(j)", _theil_u, symmetric=False, bounds=(0, 1)),
    # psychometric / monotonicity
    Measure("loevinger_h", "(ad-bc)/min((a+b)(b+d),(a+c)(c+d))", _loevinger, signed=True,
            label="Loevinger H_ij (Cov / Cov_max)"),
    Measure("symmetric_h", "1-((b+c)/n)/(2Pi(1-Pj)+2Pj(1-Pi))", _symmetric_h, signed=True),
    Measure("phi_squared", "phi^2", lambda a, b, c, d: _phi(a, b, c, d) ** 2, bounds=(0, 1),
            label="unsigned isotonic R^2 for binary pairs"),
    Measure("signed_phi_squared", "sign(ad-bc) phi^2",
            lambda a, b, c, d: np.sign(a * d - b * c) * _phi(a, b, c, d) ** 2, signed=True, bounds=(-1, 1),
            label="signed isotonic R^2 for binary pairs"),
    Measure("a_phi", "1.7 phi/sqrt(1-phi^2)", _a_from_phi, signed=True,
            label="2PL slope implied by phi"),
]

REGISTRY = {m.name: m for m in _ENTRIES}
assert len(REGISTRY) == len(_ENTRIES), "duplicate registry key"

# Measures without a usable 2x2 closed form (Goodman-Kruskal lambda, Rand/ARI)
# are intentionally absent.


def get_measure(name: str) -> Measure:
    key = str(name).lower()
    try:
        return REGISTRY[key]
    except KeyError:
        raise RegistryError(name, REGISTRY, kind="measure") from None


def pair_measure(name: str, counts: ContingencyCounts) -> float | None:
    """Value of one registry measure on one table; None when undefined.

    >>> round(pair_measure("kappa", ContingencyCounts(40, 10, 10, 40)), 12)
    0.6
    """
    m = get_measure(name)
    v = float(m(counts.a, counts.b, counts.c, counts.d))
    return v if np.isfinite(v) else None


def pairwise_values(matrix: ResponseMatrix, name: str) -> np.ndarray:
    """p x p array of measure(i, j); NaN on the diagonal and where undefined."""
    m = get_measure(name)
    if not matrix.is_binary:
        raise DomainError(f"measure {m.name!r} needs binary items; "
                          "use the isotonic module for ordinal or continuous data")
    a, b, c, d = binary_counts(matrix.values)
    out = np.array(m(a, b, c, d), dtype=float)
    out[~np.isfinite(out)] = np.nan
    np.fill_diagonal(out, np.nan)
    return out


def _per_item(matrix, values, reducer, method, orientation, strict):
    p = matrix.p
    scores = np.full(p, np.nan)
    n_pairs = np.zeros(p, dtype=int)
    n_undef = np.zeros(p, dtype=int)
    empty = []
    for i in range(p):
        row = np.delete(values[i], i)
        ok = np.isfinite(row)
        n_pairs[i] = ok.sum()
        n_undef[i] = (~ok).sum()
        if not ok.any():
            empty.append(matrix.item_ids[i])
            continue
        scores[i] = reducer(row[ok])
    if empty and strict:
        raise AggregationError(f"{method}: every pair undefined for item(s) {', '.join(empty)}")
    return ItemScoreVector(method, matrix.item_ids, scores, orientation,
                           {"n_pairs": n_pairs, "n_undefined_pairs": n_undef})


def interitem_item_score(matrix: ResponseMatrix, name: str, strict: bool = True) -> ItemScoreVector:
    """Mean of ``measure(i, j)`` over j != i, skipping undefined pairs.

    With ``strict=False`` an item whose every pair is undefined gets NaN
    instead of raising.
    """
    m = get_measure(name)
    return _per_item(matrix, pairwise_values(matrix, m.name), np.mean, m.name, m.orientation, strict)


def proportion_negative(matrix: ResponseMatrix, name: str = "tetrachoric", strict: bool = True) -> ItemScoreVector:
    """Share of an item's defined pairs with a negative measure (higher = suspicious)."""
    m = get_measure(name)
    if not m.signed:
        raise DomainError(f"measure {m.name!r} is never negative")
    return _per_item(matrix, pairwise_values(matrix, m.name), lambda r: float((r < 0).mean()),
                     f"{m.name}_neg", HIGHER_IS_SUSPICIOUS, strict)


def pairwise_quantile(matrix: ResponseMatrix, name: str, q: float, strict: bool = True) -> ItemScoreVector:
    """Linear-interpolated q-quantile of an item's defined pairwise values."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile must be in [0, 1], got {q}")
    m = get_measure(name)
    return _per_item(matrix, pairwise_values(matrix, m.name), lambda r: float(np.quantile(r, q)),
                     f"{m.name}_q{q:g}", m.orientation, strict)


def describe_registry() -> str:
    lines = []
    for m in _ENTRIES:
        tags = ["symmetric" if m.symmetric else "asymmetric", "signed" if m.signed else "nonnegative",
                "lower=suspicious" if m.orientation == LOWER_IS_SUSPICIOUS else "higher=suspicious"]
        label = f"  ({m.label})" if m.label else ""
        lines.append(f"{m.name:22s} {m.formula}{label}  [{', '.join(tags)}]")
    return "\n".join(lines)
