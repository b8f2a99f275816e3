import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import THREE_INTERVALS_X, THREE_INTERVALS_Y, exhaustive_split
from rtdpa.errors import SchemaError
from rtdpa.learners.boosting import AdaBoost, GradientBoosting, boosted_predict, samme_alpha
from rtdpa.learners.forest import ExtraTrees, RandomForest
from rtdpa.learners.tree import (
    DecisionTree,
    SplitConfig,
    best_split,
    export_dot,
    impurity,
    majority_vote,
)


def toy_blobs(rng, n=60):
    X = np.vstack([rng.normal(c, 0.6, size=(n, 2)) for c in ((0, 0), (3, 0), (0, 3))])
    return X, np.repeat([1, 2, 3], n)


# ---------------------------------------------------------------- impurity and splits


def test_impurity_values():
    assert impurity([4, 0], "gini") == 0.0 and impurity([4, 0], "entropy") == 0.0
    assert impurity([5, 5], "gini") == 0.5 and impurity([5, 5], "entropy") == 1.0
    assert impurity([2, 1, 1], "gini") == pytest.approx(1 - (0.25 + 0.0625 + 0.0625))
    with pytest.raises(SchemaError):
        impurity([1, 1], "mse")


def test_midpoint_split_example():
    X = np.array([[1.0], [2.0], [8.0], [9.0]])
    s = best_split(X, [0, 0, 1, 1])
    assert s.feature == 0 and s.threshold == 5.0 and s.gain == pytest.approx(0.5, abs=1e-15)


def test_constant_features_have_no_split():
    assert best_split(np.ones((5, 2)), [0, 1, 0, 1, 1]) is None


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 50), st.integers(1, 3), st.integers(2, 4), st.sampled_from(["gini", "entropy"]),
       st.integers(0, 10_000))
def test_best_split_matches_exhaustive_oracle(n, m, K, criterion, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(n, m)).astype(float)
    y = rng.integers(0, K, size=n)
    got = best_split(X, y, config=SplitConfig(criterion), n_classes=K)
    want = exhaustive_split(X, y, criterion)
    if want is None:
        assert got is None
    else:
        assert got.feature == want[0]
        assert abs(got.gain - want[2]) <= 1e-12


# ---------------------------------------------------------------- single trees


def test_stump_on_example_is_perfect():
    X = np.array([[1.0], [2.0], [8.0], [9.0]])
    t = DecisionTree(max_depth=1).fit(X, [1, 1, 2, 2])
    assert (t.predict(X) == [1, 1, 2, 2]).all()


def test_pure_input_is_one_leaf(rng):
    t = DecisionTree().fit(rng.normal(size=(10, 2)), [3] * 10)
    assert t.tree.n_leaves == 1 and (t.predict(rng.normal(size=(4, 2))) == 3).all()


def test_unlimited_depth_memorizes_distinct_points(rng):
    X = rng.normal(size=(80, 3))
    y = rng.integers(1, 4, 80)
    assert (DecisionTree().fit(X, y).predict(X) == y).all()


def test_max_depth_is_respected(rng):
    X, y = toy_blobs(rng)
    assert DecisionTree(max_depth=2).fit(X, y).tree.depth() <= 2


def test_export_formats():
    t = DecisionTree(max_depth=1).fit(np.array([[1.0], [2.0], [8.0], [9.0]]), [1, 1, 2, 2])
    text = t.export_text(["AMOUNT"])
    assert "|--- AMOUNT <= 5.00" in text and "|--- AMOUNT >  5.00" in text
    assert export_dot(t.tree, ["AMOUNT"]).startswith("digraph")


def test_majority_vote_rules():
    assert majority_vote([1, 2, 1]) == 1
    assert majority_vote([4, 4, 4]) == 4
    assert majority_vote([1, 2]) == 1
    np.testing.assert_array_equal(majority_vote([[1, 2], [2, 2], [1, 3]]), [1, 2])


# ---------------------------------------------------------------- forests


def test_bootstrap_unique_fraction():
    rf = RandomForest(n_trees=200, max_depth=1, seed=5).fit(np.arange(100.0)[:, None], np.arange(100) % 2)
    in_bag = [1 - len(o) / 100 for o in rf.oob_indices]
    assert abs(np.mean(in_bag) - (1 - 1 / math.e)) < 0.03
    assert rf.oob_score is not None


def test_single_unbagged_full_feature_forest_is_a_tree(rng):
    X, y = toy_blobs(rng)
    rf = RandomForest(n_trees=1, bootstrap=False, feature_subsample=1.0).fit(X, y)
    Q = rng.normal(1, 2, size=(100, 2))
    np.testing.assert_array_equal(rf.predict(Q), DecisionTree().fit(X, y).predict(Q))


def test_forest_beats_or_matches_a_stump(small_data):
    from rtdpa.dataset import partition_indices
    from rtdpa.preprocess import PreprocessPlan, fit_preprocessor, transform
    d = small_data.take(partition_indices(small_data)["agriculture"])
    X = transform(fit_preprocessor(d, PreprocessPlan()), d)
    y = d.targets
    stump = (DecisionTree(max_depth=1).fit(X, y).predict(X) == y).mean()
    forest = (RandomForest(n_trees=15, seed=1).fit(X, y).predict(X) == y).mean()
    assert forest >= stump


def test_extra_trees_randomization(rng):
    X, y = toy_blobs(rng)
    a = ExtraTrees(n_trees=1, seed=1).fit(X, y).trees[0]
    b = ExtraTrees(n_trees=1, seed=2).fit(X, y).trees[0]
    assert not np.array_equal(a.threshold, b.threshold)
    again = ExtraTrees(n_trees=1, seed=1).fit(X, y).trees[0]
    np.testing.assert_array_equal(a.threshold, again.threshold)


def test_extra_trees_fit_pure_clusters(rng):
    X, y = toy_blobs(rng, 20)
    X = X * 0.1 + np.repeat([[0, 0], [10, 0], [0, 10]], 20, axis=0)
    assert (ExtraTrees(n_trees=5).fit(X, y).predict(X) == y).all()


# ---------------------------------------------------------------- AdaBoost


def test_samme_weights():
    assert samme_alpha(0.5, 2) == 0.0
    assert samme_alpha(0.25, 4) == pytest.approx(math.log(3) + math.log(3))


def test_three_intervals_need_several_stumps():
    single = AdaBoost(n_rounds=1).fit(THREE_INTERVALS_X, THREE_INTERVALS_Y)
    assert (single.predict(THREE_INTERVALS_X) == THREE_INTERVALS_Y).mean() < 1.0
    ens = AdaBoost(n_rounds=10).fit(THREE_INTERVALS_X, THREE_INTERVALS_Y)
    assert (ens.predict(THREE_INTERVALS_X) == THREE_INTERVALS_Y).all()
    assert len(ens.learners) <= 10


def test_binary_adaboost_is_a_signed_vote(rng):
    X, y = toy_blobs(rng)
    keep = y < 3
    X, y = X[keep], y[keep]
    m = AdaBoost(n_rounds=8).fit(X, y)
    signed = np.zeros(len(X))
    for tree, a in zip(m.learners, m.weights):
        h = np.where(np.argmax(tree.value[tree.apply(X)], axis=1) == 1, 1.0, -1.0)
        signed += a * h
    expected = np.where(signed > 0, 2, 1)
    np.testing.assert_array_equal(m.predict(X), expected)


def test_single_round_equals_its_learner(rng):
    X, y = toy_blobs(rng)
    m = AdaBoost(n_rounds=1).fit(X, y)
    stump = DecisionTree(max_depth=1).fit(X, y)
    np.testing.assert_array_equal(m.predict(X), stump.predict(X))


def test_chance_level_first_learner_warns():
    X = np.zeros((4, 1))
    with pytest.warns(UserWarning, match="chance"):
        m = AdaBoost(n_rounds=3).fit(X, [1, 2, 1, 2])
    assert m.weights == [1.0]


# ---------------------------------------------------------------- gradient boosting


def test_zero_learning_rate_predicts_prior(rng):
    X, y = toy_blobs(rng)
    y = np.concatenate([y, np.full(20, 1)])
    X = np.vstack([X, rng.normal(size=(20, 2))])
    m = GradientBoosting(n_rounds=3, learning_rate=0.0).fit(X, y)
    assert (m.predict(rng.normal(size=(10, 2))) == 1).all()
    assert (GradientBoosting(n_rounds=0).fit(X, y).predict(X) == 1).all()


def test_scores_and_labels_agree(rng):
    X, y = toy_blobs(rng)
    labels, scores = boosted_predict(GradientBoosting(n_rounds=5).fit(X, y), X)
    np.testing.assert_array_equal(labels, np.array([1, 2, 3])[np.argmax(scores, 1)])


@settings(max_examples=25, deadline=None)
@given(st.integers(10, 60), st.integers(2, 4), st.floats(0.05, 3.0), st.integers(0, 999),
       st.sampled_from(["level_wise", "leaf_wise"]))
def test_deviance_never_increases(n, K, lr, seed, growth):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = rng.integers(0, K, n)
    if len(set(y.tolist())) < 2:
        return
    m = GradientBoosting(n_rounds=6, learning_rate=lr, max_depth=2, growth=growth, max_leaves=4).fit(X, y)
    t = m.deviance_trace
    assert all(b <= a + 1e-12 for a, b in zip(t, t[1:]))


@pytest.mark.filterwarnings("ignore::rtdpa.errors.RtdpaWarning")
def test_leaf_wise_fits_at_least_as_well_at_equal_budget(tmp_path):
    # a greedy property, not a theorem: checked on the default benchmark data
    from rtdpa import synth
    from rtdpa.dataset import load_csv, partition_indices
    from rtdpa.preprocess import PreprocessPlan, fit_preprocessor, transform
    res = synth.generate(synth.SynthSpec(seed=0))
    (tmp_path / "b.csv").write_text(res.csv_text)
    full = load_csv(tmp_path / "b.csv", res.schema)
    for rt, idx in partition_indices(full).items():
        d = full.take(idx)
        X = transform(fit_preprocessor(d, PreprocessPlan()), d)
        for depth in (2, 3):
            level = GradientBoosting(n_rounds=3, max_depth=depth, growth="level_wise").fit(X, d.targets)
            leaf = GradientBoosting(n_rounds=3, max_depth=None, growth="leaf_wise",
                                    max_leaves=2 ** depth).fit(X, d.targets)
            assert leaf.deviance_trace[-1] <= level.deviance_trace[-1] + 1e-9
