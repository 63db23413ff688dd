"""Named item-scoring methods used by the experiment harness and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import contingency, isotonic, restscore
from .dataset import ResponseMatrix
from .errors import RegistryError
from .evalrank import LOWER_IS_SUSPICIOUS, ItemScoreVector


@dataclass(frozen=True)
class MethodOptions:
    mode: str = isotonic.DEFAULT_MODE
    aggregation: str = "mean"
    strategy: isotonic.NeighborStrategy = field(default_factory=isotonic.NeighborStrategy)
    threads: int = 1


@dataclass(frozen=True)
class Method:
    name: str
    fn: Callable
    interitem: bool
    binary_only: bool
    description: str

    def __call__(self, matrix: ResponseMatrix, options: MethodOptions | None = None) -> ItemScoreVector:
        s = self.fn(matrix, options or MethodOptions())
        return ItemScoreVector(self.name, s.item_ids, s.scores, s.orientation, s.diagnostics)


def _iso(aggregation=None, mode=None):
    def run(matrix, opt):
        pairs = isotonic.pairwise_matrix(matrix, mode or opt.mode, opt.strategy, threads=opt.threads)
        return isotonic.item_fit(pairs, aggregation or opt.aggregation)
    return run


def _iso_rest(matrix, opt):
    scores = [isotonic.rest_iso_r2(matrix, i, opt.mode) for i in range(matrix.p)]
    return ItemScoreVector("r2_iso_rest", matrix.item_ids, np.array(scores), LOWER_IS_SUSPICIOUS)


def _build():
    out = {}

    def add(name, fn, interitem, binary_only, description):
        out[name] = Method(name, fn, interitem, binary_only, description)

    add("m_iso", _iso(), True, False, "signed isotonic R^2, mean over partners (options.aggregation)")
    add("m_iso_sym", _iso("symmetrized_mean"), True, False, "signed isotonic R^2, symmetrized pairs")
    add("m_iso_trim", _iso("trimmed_mean"), True, False, "signed isotonic R^2, 10% trimmed mean")
    add("m_iso_median", _iso("median"), True, False, "signed isotonic R^2, median")
    add("m_iso_abs", _iso("absolute_mean"), True, False, "unsigned isotonic R^2, mean of |M|")
    add("m_iso_up", _iso("mean", isotonic.TAU_SIGN_UP_FIT), True, False,
        "nondecreasing fit signed by Kendall tau")
    add("m_iso_bidir", _iso("symmetrized_mean", isotonic.BIDIRECTIONAL_BEST_FIT), True, False,
        "mean of both directions' best-direction signed R^2")
    for m in contingency.REGISTRY.values():
        add(m.name, (lambda name: lambda mat, opt: contingency.interitem_item_score(mat, name, strict=False))(m.name),
            True, True, f"mean pairwise {m.formula}")
    add("cneg", lambda mat, opt: contingency.proportion_negative(mat, "tetrachoric", strict=False), True, True,
        "share of negative tetrachoric (approx.) pairs")
    for tag, q in (("cmin", 0.0), ("c5", 0.05), ("c10", 0.10), ("c25", 0.25), ("cmedian", 0.5), ("c75", 0.75),
                   ("cmax", 1.0)):
        add(tag, (lambda q: lambda mat, opt: contingency.pairwise_quantile(mat, "tetrachoric", q, strict=False))(q),
            True, True, f"{q:g}-quantile of tetrachoric (approx.) pairs")
    add("rho_rest", lambda mat, opt: restscore.item_rest_scores(mat, "pearson"), False, False,
        "Pearson item-rest correlation")
    add("z_rest", lambda mat, opt: restscore.item_rest_scores(mat, "z_mokken"), False, False,
        "sqrt(N-1) sum Cov / sqrt(sum Var Var)")
    add("mi_rest", lambda mat, opt: restscore.item_rest_scores(mat, "mutual_information"), False, False,
        "mutual information with the binned rest score")
    add("r2_iso_rest", _iso_rest, False, False, "signed isotonic R^2 of the item on its rest score")
    add("alpha_drop", lambda mat, opt: restscore.alpha_drop(mat), False, False, "alpha - alpha without item")
    add("mean_corr_drop", lambda mat, opt: restscore.mean_corr_drop(mat), False, False,
        "mean correlation - mean correlation without item")
    add("loevinger_hi", lambda mat, opt: restscore.loevinger_item(mat), False, True, "Mokken item H_i")
    return out


METHODS = _build()


def get_method(name: str) -> Method:
    key = str(name).strip().lower()
    try:
        return METHODS[key]
    except KeyError:
        raise RegistryError(name, METHODS, kind="method") from None


def compute(name: str, matrix: ResponseMatrix, options: MethodOptions | None = None) -> ItemScoreVector:
    return get_method(name)(matrix, options)

