import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoscale.dataset import ItemLabelSet
from isoscale.errors import DegenerateEvaluationError, EvaluationError
from isoscale.evalrank import (HIGHER_IS_SUSPICIOUS, LOWER_IS_SUSPICIOUS, ItemScoreVector, auc, average_rank,
                               borda, evaluation_report, roc_points, scores_from_mapping)

import oracles


def make(bad, good, orientation=HIGHER_IS_SUSPICIOUS):
    ids = [f"b{k}" for k in range(len(bad))] + [f"g{k}" for k in range(len(good))]
    s = ItemScoreVector("m", ids, np.r_[bad, good].astype(float), orientation)
    return s, ItemLabelSet.from_bad(ids, ids[:len(bad)])


score_sets = st.tuples(st.lists(st.integers(0, 6), min_size=1, max_size=12),
                       st.lists(st.integers(0, 6), min_size=1, max_size=12))


def test_hand_case_five_sixths():
    s, lab = make([0.9, 0.7], [0.8, 0.2, 0.1])
    r = auc(s, lab)
    assert r.auc == 5 / 6 and r.n_bad == 2 and r.n_good == 3 and r.n_tied_pairs == 0


def test_perfect_and_all_tied():
    s, lab = make([5, 4], [1, 0])
    assert auc(s, lab).auc == 1.0
    s, lab = make([1, 1], [1, 1, 1])
    r = auc(s, lab)
    assert r.auc == 0.5 and r.n_tied_pairs == 6


def test_lower_is_suspicious_is_negated():
    s, lab = make([0.1, 0.2], [0.5, 0.9], LOWER_IS_SUSPICIOUS)
    assert auc(s, lab).auc == 1.0
    np.testing.assert_array_equal(s.suspicion(), -s.scores)


def test_degenerate_and_undefined():
    s, lab = make([], [1.0, 2.0])
    with pytest.raises(DegenerateEvaluationError):
        auc(s, lab)
    s, lab = make([np.nan], [np.nan, np.nan])
    with pytest.raises(EvaluationError):
        auc(s, lab)
    s, lab = make([np.nan, 3.0], [1.0, np.nan])
    r = auc(s, lab)
    assert r.auc == 1.0 and r.n_undefined_items == 2 and r.n_bad == 1


@given(score_sets)
def test_auc_matches_pair_count(sets):
    bad, good = sets
    s, lab = make(bad, good)
    r = auc(s, lab)
    assert r.auc == pytest.approx(oracles.auc_pairs(bad, good), abs=1e-12)
    assert r.auc == pytest.approx((r.wins + 0.5 * r.n_tied_pairs) / (r.n_bad * r.n_good))


@given(score_sets)
def test_roc_area_matches_auc(sets):
    s, lab = make(*sets)
    curve = roc_points(s, lab)
    assert curve.points[0] == (0.0, 0.0) and curve.points[-1] == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert curve.area() == pytest.approx(auc(s, lab).auc, abs=1e-12)


@given(score_sets)
def test_auc_monotone_invariance(sets):
    bad, good = sets
    a = auc(*make(bad, good)).auc
    b = auc(*make(np.exp(np.array(bad, float)), np.exp(np.array(good, float)))).auc
    assert a == b


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=20, unique=True), st.integers(1, 19))
def test_auc_negation_complement(vals, k):
    k = min(k, len(vals) - 1)
    bad, good = vals[:k], vals[k:]
    a = auc(*make(bad, good)).auc
    b = auc(*make(-np.array(bad), -np.array(good))).auc
    assert a + b == pytest.approx(1.0, abs=1e-12)


@given(score_sets, st.integers(0, 20))
def test_excluding_undefined_item_keeps_counts(sets, where):
    bad, good = sets
    s, lab = make(bad, good)
    base = auc(s, lab)
    vals = s.scores.copy()
    ids = list(s.item_ids) + ["extra"]
    s2 = ItemScoreVector("m", ids, np.r_[vals, np.nan], HIGHER_IS_SUSPICIOUS)
    lab2 = ItemLabelSet({**lab.labels, "extra": where % 2})
    r = auc(s2, lab2)
    assert (r.wins, r.n_tied_pairs, r.auc) == (base.wins, base.n_tied_pairs, base.auc)
    assert r.n_undefined_items == 1


def test_roc_examples():
    s, lab = make([5, 4], [1, 0])
    assert (0.0, 1.0) in roc_points(s, lab).points
    s, lab = make([9], [1, 2, 3])
    nonzero = [p for p in roc_points(s, lab).points if p != (0.0, 0.0)]
    assert nonzero[0] == (0.0, 1.0)


def test_roc_csv(tmp_path):
    s, lab = make([0.9, 0.7], [0.8, 0.2, 0.1])
    roc_points(s, lab).to_csv(tmp_path / "roc.csv")
    lines = (tmp_path / "roc.csv").read_text().splitlines()
    assert lines[0] == "threshold,fpr,tpr" and lines[1].startswith("inf,0.0,0.0")


# ---------------------------------------------------------------- aggregation


def test_average_rank_examples():
    np.testing.assert_array_equal(average_rank([[0.9, 0.5], [0.8, 0.7]]).values, [1.0, 2.0])
    np.testing.assert_array_equal(average_rank([[0.6, 0.6]]).values, [1.5, 1.5])
    # trial 1: A > B > C ; trial 2: C > A = B
    table = [[0.9, 0.8, 0.7], [0.5, 0.5, 0.9]]
    np.testing.assert_allclose(average_rank(table).values, [(1 + 2.5) / 2, (2 + 2.5) / 2, (3 + 1) / 2])


def test_average_rank_undefined():
    r = average_rank([[0.9, np.nan, 0.4], [0.3, np.nan, 0.8]])
    assert r.excluded == (1,) and np.isnan(r.values[1])
    r = average_rank([[0.9, np.nan, 0.4], [0.3, 0.5, 0.8]])
    np.testing.assert_allclose(r.values, [(1 + 3) / 2, 2.0, (2 + 1) / 2])


def test_borda_examples():
    table = [[0.9, 0.8, 0.7], [0.9, 0.8, 0.7], [0.8, 0.9, 0.7]]
    np.testing.assert_array_equal(borda(table).values, [5, 4, 0])
    np.testing.assert_array_equal(borda([[0.7], [0.2]]).values, [0])
    t = borda([[0.5, 0.5, 0.5], [0.1, 0.1, 0.1]]).values
    assert t[0] == t[1] == t[2] == 2.0


def test_item_score_vector_helpers(tmp_path):
    s = scores_from_mapping("m", {"a": 0.2, "b": None, "c": 0.9}, LOWER_IS_SUSPICIOUS)
    assert s.ranking() == ["a", "c", "b"]
    assert s.as_dict() == {"a": 0.2, "b": None, "c": 0.9}
    s.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "item_id,score,n_pairs,n_undefined"
    with pytest.raises(ValueError):
        ItemScoreVector("m", ["a"], [1.0], "sideways")


def test_evaluation_report_fields():
    s, lab = make([0.9], [0.1])
    rep = json.loads(evaluation_report({"m": auc(s, lab)}))
    assert set(rep["m"]) == {"auc", "n_bad", "n_good", "n_tied_pairs", "n_undefined_items"}
