import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoscale.dataset import ResponseMatrix
from isoscale.errors import DimensionError, DomainError
from isoscale.restscore import (alpha_drop, cronbach_alpha, item_rest_scores, item_rest_stat, loevinger_item,
                                mean_corr_drop, rest_score, write_item_stats)


def parallel_plus_noise(n=400, k=5, seed=0):
    rng = np.random.default_rng(seed)
    theta = rng.normal(size=n)
    items = [(theta + rng.normal(size=n) * 0.7 > 0).astype(float) for _ in range(k)]
    noise = (rng.random(n) < 0.5).astype(float)
    return ResponseMatrix(np.column_stack(items + [noise]))


def test_rest_score_examples():
    m = ResponseMatrix([[1, 0], [0, 1], [1, 1.0]])
    np.testing.assert_array_equal(rest_score(m, 0).values, [0, 1, 1])
    np.testing.assert_array_equal(rest_score(ResponseMatrix(np.ones((3, 3))), 1).values, [2, 2, 2])
    m = ResponseMatrix([[1, np.nan, 1], [1, 1, 1.0]])
    r = rest_score(m, 0)
    np.testing.assert_array_equal(r.values, [1, 2])
    np.testing.assert_array_equal(r.missing_per_row, [1, 0])
    with pytest.raises(IndexError):
        rest_score(m, 3)


def test_z_mokken_zero_covariance():
    m = ResponseMatrix([[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0.0]])
    assert item_rest_stat(m, 0, "z_mokken") == pytest.approx(0.0, abs=1e-15)


def test_z_mokken_duplicate_columns():
    c = np.array([0, 1, 1, 0, 1, 0, 1.0])
    z = item_rest_stat(ResponseMatrix(np.column_stack([c, c])), 0, "z_mokken")
    assert z == pytest.approx(math.sqrt(len(c) - 1))


@given(st.integers(0, 10_000))
def test_z_mokken_sign_follows_covariance_sum(seed):
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, 3, size=(15, 4)).astype(float)
    m = ResponseMatrix(vals)
    z = item_rest_stat(m, 0, "z_mokken")
    iv = vals.astype(int)
    n = iv.shape[0]
    # n^2 * sum of covariances, exact in integers
    exact = sum(n * int(iv[:, 0] @ iv[:, j]) - int(iv[:, 0].sum()) * int(iv[:, j].sum()) for j in range(1, 4))
    if z is not None:
        if exact == 0:
            assert abs(z) < 1e-12
        else:
            assert np.sign(z) == np.sign(exact)


def test_pearson_rest():
    c = np.array([0, 1, 2, 1, 0.0])
    assert item_rest_stat(ResponseMatrix(np.column_stack([c, c])), 0) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        item_rest_stat(ResponseMatrix([[0, 1], [1, 0.0]]), 0)
    assert item_rest_stat(ResponseMatrix([[1, 0], [1, 1], [1, 0.0]]), 0) is None


def test_mi_rest_is_nonnegative_and_bits():
    m = parallel_plus_noise()
    s = item_rest_scores(m, "mutual_information")
    assert s.method == "mutual_information_rest" and (s.scores >= 0).all() and (s.scores <= 1).all()
    assert np.argmin(s.scores) == 5
    with pytest.raises(ValueError):
        item_rest_stat(m, 0, "spearman")


def test_cronbach_examples():
    c = np.array([0, 1, 1, 0, 1.0])
    assert cronbach_alpha(ResponseMatrix(np.column_stack([c, c]))) == pytest.approx(1.0)
    assert cronbach_alpha(ResponseMatrix(np.column_stack([[0, 1, 0, 1], [0, 1, 1, 0.0]]))) == pytest.approx(0.0)
    assert cronbach_alpha(ResponseMatrix(np.ones((3, 2)))) is None


def test_cronbach_spearman_brown():
    # k items sharing a common factor exactly: equal covariances and variances
    k, rho = 4, 0.3
    rng = np.random.default_rng(1)
    cov = np.full((k, k), rho) + (1 - rho) * np.eye(k)
    z = rng.normal(size=(2000, k))
    z = (z - z.mean(0)) @ np.linalg.inv(np.linalg.cholesky(np.cov(z, rowvar=False)).T)
    x = z @ np.linalg.cholesky(cov).T
    assert cronbach_alpha(ResponseMatrix(x)) == pytest.approx(k * rho / (1 + (k - 1) * rho), abs=1e-6)


@given(st.floats(0.1, 50))
def test_cronbach_scale_invariance(scale):
    m = parallel_plus_noise(n=60)
    assert cronbach_alpha(ResponseMatrix(m.values * scale)) == pytest.approx(cronbach_alpha(m), rel=1e-9)


def test_noise_item_selected_by_every_statistic():
    m = parallel_plus_noise()
    assert np.argmin(alpha_drop(m).scores) == 5
    assert np.argmin(mean_corr_drop(m).scores) == 5
    assert np.argmin(loevinger_item(m).scores) == 5
    assert np.argmin(item_rest_scores(m, "pearson").scores) == 5
    assert np.argmin(item_rest_scores(m, "z_mokken").scores) == 5


def test_exchangeable_items_equal_scores():
    base = np.array([[0, 0, 0], [1, 1, 1], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1.0]])
    m = ResponseMatrix(np.vstack([base, base[:2]]))
    for fn in (alpha_drop, mean_corr_drop):
        s = fn(m).scores
        np.testing.assert_allclose(s, s[0], atol=1e-12)


def test_item_drop_needs_three_items():
    m = ResponseMatrix([[0, 1], [1, 0], [1, 1.0]])
    for fn in (alpha_drop, mean_corr_drop):
        with pytest.raises(DimensionError):
            fn(m)


def test_mean_corr_drop_anticorrelated_and_duplicates():
    rng = np.random.default_rng(2)
    z = rng.normal(size=100)
    cols = [z + rng.normal(size=100) * 0.5 for _ in range(3)] + [-z]
    assert np.argmin(mean_corr_drop(ResponseMatrix(np.column_stack(cols))).scores) == 3
    c = rng.normal(size=30)
    np.testing.assert_allclose(mean_corr_drop(ResponseMatrix(np.column_stack([c, c, c]))).scores, 0.0, atol=1e-12)


@given(st.permutations(range(6)))
def test_item_drop_permutation_equivariance(perm):
    m = parallel_plus_noise(n=80)
    mp = ResponseMatrix(m.values[:, perm], [m.item_ids[k] for k in perm])
    for fn in (alpha_drop, mean_corr_drop):
        np.testing.assert_allclose(fn(mp).scores, fn(m).scores[list(perm)], atol=1e-12)


def test_loevinger_item_examples():
    # Guttman pattern: each respondent passes the k easiest items
    g = np.array([[1, 1, 1], [1, 1, 0], [1, 0, 0], [0, 0, 0], [1, 1, 1], [1, 0, 0.0]])
    np.testing.assert_allclose(loevinger_item(ResponseMatrix(g)).scores, 1.0)
    ind = np.array([[1, 1], [1, 0], [0, 1], [0, 0.0]])
    np.testing.assert_allclose(loevinger_item(ResponseMatrix(ind)).scores, 0.0)
    # every pair has table (40, 10, 10, 40)
    rows = [[1, 1]] * 40 + [[1, 0]] * 10 + [[0, 1]] * 10 + [[0, 0]] * 40
    np.testing.assert_allclose(loevinger_item(ResponseMatrix(np.array(rows, float))).scores, 0.6)
    with pytest.raises(DomainError):
        loevinger_item(ResponseMatrix([[0, 2], [1, 1.0]]))


def test_write_item_stats(tmp_path):
    s = item_rest_scores(ResponseMatrix([[1, 0, 1], [1, 1, 0], [1, 0, 0], [1, 1, 1.0]]), "pearson")
    write_item_stats(s, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "item_id,statistic,value,defined"
    assert lines[1] == "q1,pearson_rest,,0"
