"""Ranking evaluation: AUC, ROC curves, and cross-trial rank aggregation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .dataset import ItemLabelSet
from .errors import DegenerateEvaluationError, EvaluationError

HIGHER_IS_SUSPICIOUS = "higher_is_suspicious"
LOWER_IS_SUSPICIOUS = "lower_is_suspicious"


@dataclass(frozen=True, eq=False)
class ItemScoreVector:
    """One score per item for a named method.

    ``scores`` is aligned with ``item_ids``; NaN marks an undefined score.
    ``orientation`` says which end of the scale is suspicious.
    """

    method: str
    item_ids: tuple
    scores: np.ndarray
    orientation: str
    diagnostics: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.orientation not in (HIGHER_IS_SUSPICIOUS, LOWER_IS_SUSPICIOUS):
            raise ValueError(f"bad orientation {self.orientation!r}")
        s = np.array(self.scores, dtype=float)
        if s.shape != (len(self.item_ids),):
            raise ValueError("scores and item_ids differ in length")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.scores)

    def suspicion(self) -> np.ndarray:
        """Scores oriented so that larger means more suspicious."""
        return -self.scores if self.orientation == LOWER_IS_SUSPICIOUS else self.scores.copy()

    def as_dict(self) -> dict:
        return {i: (float(s) if np.isfinite(s) else None) for i, s in zip(self.item_ids, self.scores)}

    def ranking(self) -> list:
        """Item ids from most to least suspicious; undefined scores go last."""
        susp = self.suspicion()
        key = np.where(np.isfinite(susp), susp, -np.inf)
        order = sorted(range(len(key)), key=lambda k: (-key[k], k))
        return [self.item_ids[k] for k in order]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["item_id", "score", "n_pairs", "n_undefined"])
            n_pairs = self.diagnostics.get("n_pairs")
            n_undef = self.diagnostics.get("n_undefined_pairs")
            for k, (i, s) in enumerate(zip(self.item_ids, self.scores)):
                w.writerow([
                    i,
                    repr(float(s)) if np.isfinite(s) else "",
                    "" if n_pairs is None else int(n_pairs[k]),
                    "" if n_undef is None else int(n_undef[k]),
                ])


@dataclass(frozen=True)
class AucResult:
    auc: float
    n_bad: int
    n_good: int
    n_tied_pairs: int
    n_undefined_items: int
    wins: float = 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("wins")
        return d


@dataclass(frozen=True)
class RocCurve:
    """Stepwise ROC points from (0, 0) to (1, 1).

    ``thresholds[k]`` is the suspicion cutoff reached at ``points[k]``
    (``inf`` for the origin).
    """

    points: tuple
    thresholds: tuple

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def area(self) -> float:
        f, t = self.fpr, self.tpr
        return float(np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2.0))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "fpr", "tpr"])
            for th, (f, t) in zip(self.thresholds, self.points):
                w.writerow([repr(float(th)), repr(float(f)), repr(float(t))])


def _split(scores: ItemScoreVector, labels: ItemLabelSet):
    susp = scores.suspicion()
    lab = labels.vector(scores.item_ids)
    ok = np.isfinite(susp)
    n_undef = int((~ok).sum())
    if not ok.any():
        raise EvaluationError(f"method {scores.method!r}: every score is undefined")
    bad = susp[ok & (lab == 1)]
    good = susp[ok & (lab == 0)]
    if bad.size == 0 or good.size == 0:
        raise DegenerateEvaluationError(
            f"method {scores.method!r}: need at least one bad and one good item with defined scores "
            f"(got {bad.size} bad, {good.size} good)"
        )
    return bad, good, n_undef


def auc_from_arrays(bad, good) -> tuple:
    """Mann-Whitney pair count. Returns (auc, wins, ties)."""
    bad = np.asarray(bad, dtype=float)
    good = np.sort(np.asarray(good, dtype=float))
    lo = np.searchsorted(good, bad, side="left")
    hi = np.searchsorted(good, bad, side="right")
    wins = float(lo.sum())
    ties = int((hi - lo).sum())
    return (wins + 0.5 * ties) / (bad.size * good.size), wins, ties


def auc(scores: ItemScoreVector, labels: ItemLabelSet) -> AucResult:
    """Probability that a random bad item is more suspicious than a random good one.

    Ties count one half. Items with undefined scores are left out and counted in
    ``n_undefined_items``.
    """
    bad, good, n_undef = _split(scores, labels)
    value, wins, ties = auc_from_arrays(bad, good)
    return AucResult(float(value), int(bad.size), int(good.size), ties, n_undef, wins)


def roc_points(scores: ItemScoreVector, labels: ItemLabelSet) -> RocCurve:
    """ROC curve from sweeping the suspicion threshold downward over unique values.

    Tied scores move the curve diagonally, so the trapezoid area equals the
    tie-corrected :func:`auc`.
    """
    bad, good, _ = _split(scores, labels)
    allv = np.concatenate([bad, good])
    is_bad = np.concatenate([np.ones(bad.size, bool), np.zeros(good.size, bool)])
    uniq = np.unique(allv)[::-1]
    pts = [(0.0, 0.0)]
    ths = [float("inf")]
    tp = fp = 0
    for th in uniq:
        at = allv == th
        tp += int((at & is_bad).sum())
        fp += int((at & ~is_bad).sum())
        pts.append((fp / good.size, tp / bad.size))
        ths.append(float(th))
    return RocCurve(tuple(pts), tuple(ths))


def _rank_rows(table: np.ndarray) -> np.ndarray:
    """Rank methods within each row (1 = highest AUC); NaN stays NaN."""
    table = np.asarray(table, dtype=float)
    ranks = np.full(table.shape, np.nan)
    for t in range(table.shape[0]):
        ok = np.isfinite(table[t])
        if ok.any():
            ranks[t, ok] = rankdata(-table[t, ok], method="average")
    return ranks


@dataclass(frozen=True)
class RankSummary:
    values: np.ndarray
    excluded: tuple  # method indices never defined


def average_rank(per_trial_aucs) -> RankSummary:
    """Mean within-trial rank of each method (rows = trials, columns = methods).

    Ties take the average rank. A method that is undefined in every trial gets
    NaN and is listed in ``excluded``.
    """
    table = np.atleast_2d(np.asarray(per_trial_aucs, dtype=float))
    if table.shape[0] < 1:
        raise EvaluationError("average_rank needs at least one trial")
    ranks = _rank_rows(table)
    ok = np.isfinite(ranks)
    cnt = ok.sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.where(cnt > 0, np.nansum(np.where(ok, ranks, 0.0), axis=0) / np.maximum(cnt, 1), np.nan)
    return RankSummary(mean, tuple(int(k) for k in np.flatnonzero(cnt == 0)))


def borda(per_config_aucs) -> RankSummary:
    """Borda totals: in each config the method at rank r of m gets m - r points.

    Tied methods share the mean of their positions' points; undefined methods
    score nothing in that config and m counts only the defined ones.
    """
    table = np.atleast_2d(np.asarray(per_config_aucs, dtype=float))
    ranks = _rank_rows(table)
    ok = np.isfinite(ranks)
    m = ok.sum(axis=1, keepdims=True)
    points = np.where(ok, m - np.where(ok, ranks, 0.0), 0.0)
    totals = points.sum(axis=0)
    never = np.flatnonzero(ok.sum(axis=0) == 0)
    totals[never] = np.nan
    return RankSummary(totals, tuple(int(k) for k in never))


def evaluation_report(results: Mapping[str, AucResult]) -> str:
    return json.dumps({k: v.as_dict() for k, v in results.items()}, indent=2, sort_keys=False)


def scores_from_mapping(method: str, mapping: Mapping[str, float], orientation: str,
                        item_ids: Sequence[str] | None = None) -> ItemScoreVector:
    ids = tuple(item_ids) if item_ids is not None else tuple(mapping)
    vals = [np.nan if mapping.get(i) is None else float(mapping[i]) for i in ids]
    return ItemScoreVector(method, ids, np.array(vals), orientation)
