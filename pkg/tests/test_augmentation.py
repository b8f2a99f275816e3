from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_knn, brute_tomek, on_segment
from rtdpa.augmentation import (
    AugmentSpec,
    adasyn,
    augment,
    enn_mask,
    largest_remainder,
    smote,
    smote_enn,
    smote_tomek,
    tomek_links,
)
from rtdpa.errors import SchemaError
from rtdpa.neighbors import NeighborIndex


def imbalanced(rng, counts, m=2):
    X = np.vstack([rng.normal(i * 2.0, 1.0, size=(n, m)) for i, n in enumerate(counts)])
    y = np.repeat(np.arange(1, len(counts) + 1), counts)
    return X, y


# ---------------------------------------------------------------- neighbours


def test_neighbor_index_matches_brute_force(rng):
    X = rng.normal(size=(200, 4))
    nn = NeighborIndex(X).kneighbors(X[:50], 5, exclude_self=True)
    for i in range(50):
        assert nn[i].tolist() == brute_knn(X, X[i], 5, exclude=i)


def test_neighbor_ties_break_by_index():
    X = np.array([[1.0], [-1.0], [1.0], [0.0]])
    assert NeighborIndex(X).query(np.array([0.0]), 3, exclude=3).tolist() == [0, 1, 2]


# ---------------------------------------------------------------- SMOTE / ADASYN


def test_interpolation_endpoints_and_midpoint():
    X = np.array([[0.0, 0.0], [2.0, 2.0], [10.0, 10.0], [11.0, 10.0], [10.0, 11.0]])
    y = np.array([1, 1, 2, 2, 2])
    X2, y2, prov = smote(X, y, AugmentSpec(k_neighbors=1, seed=3), return_provenance=True)
    for p, s, nb, dlt in zip(X2[len(X):], prov.sources, prov.neighbors, prov.deltas):
        np.testing.assert_allclose(p, X[s] + dlt * (X[nb] - X[s]), atol=1e-12)
    a, b = X[0], X[1]
    np.testing.assert_allclose(a + 0.5 * (b - a), [1.0, 1.0])


def test_smote_balances_exactly(rng):
    X, y = imbalanced(rng, [60, 7, 3])
    X2, y2 = smote(X, y, AugmentSpec(seed=1))
    assert set(Counter(y2.tolist()).values()) == {60}
    np.testing.assert_array_equal(X2[: len(X)], X)


def test_balanced_input_is_identity(rng):
    X, y = imbalanced(rng, [5, 5])
    for fn in (smote, adasyn):
        X2, y2 = fn(X, y, AugmentSpec())
        np.testing.assert_array_equal(X2, X)
        np.testing.assert_array_equal(y2, y)


def test_singleton_class_is_duplicated():
    X = np.array([[0.0], [1.0], [2.0], [9.0]])
    y = np.array([1, 1, 1, 2])
    X2, y2 = smote(X, y, AugmentSpec())
    np.testing.assert_array_equal(X2[y2 == 2], [[9.0]] * 3)


def test_adasyn_quota_follows_neighbourhood():
    # minority point 10.0 has a majority nearest neighbour (r=1); 11.0 has 10.0 (r=0)
    X = np.array([[9.0], [9.1], [9.2], [9.3], [9.4], [9.6], [10.0], [11.0]])
    y = np.array([1, 1, 1, 1, 1, 1, 2, 2])
    X2, y2, prov = adasyn(X, y, AugmentSpec(k_neighbors=1), return_provenance=True)
    assert Counter(y2.tolist()) == {1: 6, 2: 6}
    assert Counter(prov.sources.tolist()) == {6: 4}


def test_largest_remainder_quotas():
    assert largest_remainder([1.0, 0.0], 4).tolist() == [4, 0]
    assert largest_remainder([1, 1, 1], 4).tolist() == [2, 1, 1]
    assert largest_remainder([0, 0], 3).tolist() == [0, 0]


def test_unknown_variant():
    with pytest.raises(SchemaError, match="unknown augmentation"):
        AugmentSpec(variant="magic")


# ---------------------------------------------------------------- cleaning


def test_tomek_fixed_examples():
    assert tomek_links(np.array([[0.0], [1.0], [10.0]]), np.array(["A", "B", "B"])) == [(0, 1)]
    assert tomek_links(np.array([[0.0], [5.0]]), np.array([1, 2])) == [(0, 1)]
    X = np.array([[0.0], [0.1], [50.0], [50.1]])
    assert tomek_links(X, np.array([1, 1, 2, 2])) == []


def test_smote_tomek_removes_overlap_pair():
    X = np.array([[0.0], [0.1], [0.2], [3.0], [3.05], [6.0], [6.1], [6.2], [6.3], [6.4]])
    y = np.array([1, 1, 1, 1, 2, 2, 2, 2, 2, 2])
    X2, y2 = smote(X, y, AugmentSpec(seed=0))
    links = brute_tomek(X2, y2)
    assert (3, 4) in links
    X3, _ = smote_tomek(X, y, AugmentSpec(seed=0))
    for i, j in links:
        for row in (X2[i], X2[j]):
            assert not any(np.array_equal(row, r) for r in X3)


def test_smote_tomek_without_links_equals_smote():
    X = np.array([[0.0], [0.1], [0.2], [50.0], [50.1]])
    y = np.array([1, 1, 1, 2, 2])
    a = smote(X, y, AugmentSpec(seed=2))
    b = smote_tomek(X, y, AugmentSpec(seed=2))
    np.testing.assert_array_equal(a[0], b[0])


def test_enn_removes_intruder_and_keeps_agreeing_points():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1], [0.05, 0.05], [9.0, 9.0]])
    y = np.array([1, 1, 1, 1, 2, 2])
    mask = enn_mask(X, y, 3)
    assert mask[4] and not mask[:4].any()


def test_smote_enn_on_pure_clusters_only_balances():
    X = np.vstack([np.zeros((6, 2)) + np.arange(6)[:, None] * 0.01, 50 + np.arange(3)[:, None] * 0.01 * np.ones((3, 2))])
    y = np.array([1] * 6 + [2] * 3)
    X2, y2 = smote_enn(X, y, AugmentSpec(seed=1))
    X1, y1 = smote(X, y, AugmentSpec(seed=1))
    np.testing.assert_array_equal(X2, X1)


def test_augment_none_is_identity(rng):
    X, y = imbalanced(rng, [10, 3])
    X2, y2 = augment(X, y, AugmentSpec("none"))
    np.testing.assert_array_equal(X2, X)


@pytest.mark.filterwarnings("ignore::rtdpa.errors.RtdpaWarning")
@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=2, max_size=4), st.integers(1, 6), st.integers(0, 999),
       st.sampled_from(["smote", "adasyn"]))
def test_oversampling_contracts(counts, k, seed, variant):
    rng = np.random.default_rng(seed)
    X, y = imbalanced(rng, counts, m=3)
    X2, y2, prov = (smote if variant == "smote" else adasyn)(X, y, AugmentSpec(variant, k, seed=seed),
                                                              return_provenance=True)
    assert len(set(Counter(y2.tolist()).values())) == 1
    np.testing.assert_array_equal(X2[: len(X)], X)
    for p, s, nb, lab in zip(X2[len(X):], prov.sources, prov.neighbors, prov.labels):
        assert y[s] == y[nb] == lab
        assert on_segment(p, X[s], X[nb])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120), st.integers(0, 999))
def test_tomek_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    X = np.round(rng.normal(size=(n, 2)), 1)   # rounding creates distance ties
    y = rng.integers(0, 2, size=n)
    assert tomek_links(X, y) == brute_tomek(X, y)
