"""Node-split solvers: histograms, the exhaustive scan, and the adaptive search."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banditkit.bandit import SampleCounter
from banditkit.forest.histogram import (
    FeatureHistogram,
    equal_width_edges,
    uniform_random_edges,
)
from banditkit.forest.split import NO_SPLIT, mabsplit, split_exact

from oracles import naive_split_scan


def _separable_node(n, m, seed, gap=2.0, noise=0.5):
    """One informative column among m noise columns; binary labels."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    X = rng.normal(0.0, 1.0, size=(n, m))
    X[:, 0] = (2 * y - 1) * gap + rng.normal(0.0, noise, size=n)
    return X, y


# ----- histograms -------------------------------------------------------------


def test_histogram_conservation_classification():
    rng = np.random.default_rng(0)
    hist = FeatureHistogram(0, equal_width_edges(np.array([0.0, 1.0]), 8), n_classes=3)
    inserted = 0
    for _ in range(5):
        batch = rng.random(17)
        labels = rng.integers(0, 3, size=17)
        hist.insert(batch, labels)
        inserted += 17
        assert hist.counts.sum() == inserted
        left, right = hist.left_right_counts()
        assert np.all(left.sum(axis=1) + right.sum(axis=1) == inserted)


def test_histogram_conservation_regression():
    rng = np.random.default_rng(1)
    hist = FeatureHistogram(0, equal_width_edges(np.array([-1.0, 1.0]), 5), n_classes=None)
    values = rng.uniform(-1, 1, size=60)
    targets = rng.normal(size=60)
    hist.insert(values, targets)
    assert hist.bin_count.sum() == 60
    assert hist.bin_sum.sum() == pytest.approx(targets.sum())
    assert hist.bin_sumsq.sum() == pytest.approx(np.square(targets).sum())
    left, right = hist.left_right_moments()
    assert np.all(left[:, 0] + right[:, 0] == 60)


@given(
    values=st.lists(st.floats(-100, 100), min_size=1, max_size=50),
    n_bins=st.integers(2, 12),
)
def test_equal_width_binning_matches_searchsorted(values, n_bins):
    values = np.asarray(values)
    edges = equal_width_edges(values, n_bins)
    hist = FeatureHistogram(0, edges, n_classes=2)
    got = hist.bin_indices(values)
    if edges[-1] <= edges[0]:
        assert np.all(got == 0)
        return
    want = np.clip(np.searchsorted(edges[1:-1], values, side="right"), 0, n_bins - 1)
    # arithmetic indexing may land a value sitting exactly on an interior
    # edge in either adjacent bin; everything else must agree
    on_edge = np.isin(values, edges[1:-1])
    assert np.array_equal(got[~on_edge], want[~on_edge])
    assert np.all(np.abs(got[on_edge] - want[on_edge]) <= 1)


def test_uniform_random_edges_cover_range():
    values = np.array([2.0, 5.0, 11.0])
    edges = uniform_random_edges(values, 6, np.random.default_rng(0))
    assert edges[0] == 2.0 and edges[-1] == 11.0
    assert np.all(np.diff(edges) >= 0)
    constant = uniform_random_edges(np.array([3.0, 3.0]), 4, np.random.default_rng(0))
    assert np.all(constant == 3.0)


def test_plugin_proportions_unbiased():
    # multinomial sampling model: empirical left/class proportions from a
    # large with-replacement sample track the node's exact proportions
    X, y = _separable_node(500, 1, seed=2)
    edges = equal_width_edges(X[:, 0], 10)
    exact = FeatureHistogram(0, edges, n_classes=2)
    exact.insert(X[:, 0], y)
    p_true = exact.left_right_counts()[0] / 500  # (T-1, K) left proportions

    rng = np.random.default_rng(3)
    draws = rng.integers(0, 500, size=100_000)
    sampled = FeatureHistogram(0, edges, n_classes=2)
    sampled.insert(X[draws, 0], y[draws])
    p_hat = sampled.left_right_counts()[0] / 100_000
    assert np.max(np.abs(p_hat - p_true)) <= 0.01


# ----- split_exact ------------------------------------------------------------


def test_exact_two_point_node():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    res = split_exact(X, y, [0], "gini", n_bins=2)
    assert res.feature == 0
    assert res.threshold == pytest.approx(0.5)
    assert res.objective == pytest.approx(0.0)


def test_exact_prefers_the_separating_feature():
    # feature 0 carries no signal, feature 1 separates the classes
    rng = np.random.default_rng(4)
    y = np.array([0, 1] * 50)
    X = np.stack([rng.normal(size=100), (2 * y - 1) + rng.normal(0, 0.1, 100)], axis=1)
    res = split_exact(X, y, [0, 1], "gini")
    assert res.feature == 1


def test_exact_matches_independent_scanner():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(200, 5))
        y = rng.integers(0, 3, size=200)
        y[X[:, 2] > 0.3] = 0  # give one feature some signal
        res = split_exact(X, y, [0, 1, 2, 3, 4], "gini", n_bins=10, n_classes=3)
        want = naive_split_scan(X, y, [0, 1, 2, 3, 4], 10, "gini", n_classes=3)
        assert (res.feature, res.bin_index) == (want[0], want[1])
        assert res.threshold == pytest.approx(want[2], abs=1e-12)
        assert res.objective == pytest.approx(want[3], abs=1e-12)


def test_exact_constant_features_yield_sentinel():
    X = np.ones((10, 3))
    y = np.array([0, 1] * 5)
    assert split_exact(X, y, [0, 1, 2], "gini") is NO_SPLIT


def test_exact_counts_insertions():
    X, y = _separable_node(50, 4, seed=5)
    counter = SampleCounter()
    res = split_exact(X, y, [0, 1, 2, 3], "gini", counter=counter)
    assert res.n_insertions == 50 * 4
    assert counter.count == 50 * 4


def test_exact_regression_split():
    rng = np.random.default_rng(6)
    X = rng.uniform(-1, 1, size=(200, 3))
    y = np.where(X[:, 1] < 0.0, -3.0, 3.0) + rng.normal(0, 0.1, 200)
    res = split_exact(X, y, [0, 1, 2], "mse")
    assert res.feature == 1
    want = naive_split_scan(X, y, [0, 1, 2], 10, "mse")
    assert (res.feature, res.bin_index) == (want[0], want[1])
    assert res.objective == pytest.approx(want[3], rel=1e-9)


# ----- mabsplit ----------------------------------------------------------------


def test_mabsplit_forced_fallback_equals_exact():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(150, 4))
        y = rng.integers(0, 2, size=150)
        exact = split_exact(X, y, [0, 1, 2, 3], "entropy")
        got = mabsplit(
            X, y, [0, 1, 2, 3], "entropy",
            delta=1e-300, batch_size=40, rng=np.random.default_rng(seed),
        )
        assert (got.feature, got.bin_index) == (exact.feature, exact.bin_index)
        assert got.objective == pytest.approx(exact.objective, abs=1e-12)
        assert got.n_insertions == exact.n_insertions


def test_mabsplit_agrees_while_sampling_less():
    n, m = 4000, 10
    matches, ratio_sum = 0, 0.0
    for seed in range(10):
        X, y = _separable_node(n, m, seed, gap=1.0, noise=0.8)
        exact = split_exact(X, y, list(range(m)), "gini")
        got = mabsplit(
            X, y, list(range(m)), "gini",
            delta=0.01, batch_size=500, rng=np.random.default_rng(seed),
        )
        matches += got.feature == exact.feature
        ratio_sum += got.n_insertions / exact.n_insertions
    assert matches >= 9
    assert ratio_sum / 10 < 0.6


def test_mabsplit_insertions_flat_in_n():
    # adaptive sampling keyed to the gap, not the node size: 10x the points
    # should not change the insertion count by more than 20%
    def insertions(n, seed):
        X, y = _separable_node(n, 8, seed, gap=1.0, noise=0.8)
        res = mabsplit(
            X, y, list(range(8)), "gini",
            delta=0.01, batch_size=500, rng=np.random.default_rng(seed),
        )
        return res.n_insertions

    small = np.mean([insertions(3000, s) for s in range(5)])
    large = np.mean([insertions(30_000, s) for s in range(5)])
    assert abs(large - small) / small < 0.20


def test_mabsplit_with_replacement_mode():
    X, y = _separable_node(2000, 5, seed=7)
    exact = split_exact(X, y, list(range(5)), "gini")
    got = mabsplit(
        X, y, list(range(5)), "gini",
        delta=0.01, batch_size=400, sampling="with_replacement",
        rng=np.random.default_rng(0),
    )
    assert got.feature == exact.feature


def test_mabsplit_validates_arguments():
    X, y = _separable_node(50, 2, seed=8)
    with pytest.raises(ValueError):
        mabsplit(X, y, [0, 1], "gini", delta=0.0)
    with pytest.raises(ValueError):
        mabsplit(X, y, [0, 1], "gini", sampling="psychic")


def test_mabsplit_constant_features_yield_sentinel():
    X = np.zeros((40, 2))
    y = np.array([0, 1] * 20)
    assert mabsplit(X, y, [0, 1], "gini", rng=np.random.default_rng(0)) is NO_SPLIT


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 1000))
def test_mabsplit_budget_is_respected_exactly(seed):
    X, y = _separable_node(600, 6, seed)
    counter = SampleCounter(budget=10_000_000)
    res = mabsplit(
        X, y, list(range(6)), "gini",
        delta=0.2, batch_size=100, counter=counter, rng=np.random.default_rng(seed),
    )
    assert res is NO_SPLIT or counter.count == res.n_insertions
