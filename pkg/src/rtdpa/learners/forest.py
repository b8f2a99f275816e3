"""Bagged tree ensembles: random forest and extra trees.

Each tree gets its own generator spawned from the master seed, so a tree's
fit depends only on (seed, tree index). Prediction is a majority vote over
trees; the returned probabilities are vote fractions.
"""

from __future__ import annotations

import numpy as np

from rtdpa.errors import SchemaError
from rtdpa.learners.base import Classifier
from rtdpa.learners.tree import SplitConfig, TreeStructure, build_classification_tree


class _Forest(Classifier):
    def __init__(self, n_trees, max_depth, criterion, min_samples_split, feature_subsample,
                 split_mode, bootstrap, seed):
        if n_trees < 1:
            raise SchemaError("n_trees must be at least 1")
        super().__init__(n_trees=n_trees, max_depth=max_depth, criterion=criterion,
                         min_samples_split=min_samples_split, feature_subsample=feature_subsample,
                         split_mode=split_mode, bootstrap=bootstrap, seed=seed)
        self.config = SplitConfig(criterion, feature_subsample, split_mode)
        self.trees: list[TreeStructure] = []
        self.oob_indices: list[np.ndarray] = []
        self.oob_score: float | None = None

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        n = len(idx)
        K = len(self.classes_)
        p = self.params
        self.trees, self.oob_indices = [], []
        oob_votes = np.zeros((n, K))
        for child in np.random.SeedSequence(p["seed"]).spawn(p["n_trees"]):
            rng = np.random.default_rng(child)
            if p["bootstrap"]:
                rows = rng.integers(0, n, size=n)
                oob = np.setdiff1d(np.arange(n), rows)
            else:
                rows = np.arange(n)
                oob = np.empty(0, dtype=np.int64)
            tree = build_classification_tree(X[rows], idx[rows], K, self.config, p["max_depth"],
                                             p["min_samples_split"], rng)
            self.trees.append(tree)
            self.oob_indices.append(oob)
            if len(oob):
                leaf = tree.value[tree.apply(X[oob])]
                oob_votes[oob, np.argmax(leaf, axis=1)] += 1
        seen = oob_votes.sum(axis=1) > 0
        self.oob_score = float((np.argmax(oob_votes[seen], axis=1) == idx[seen]).mean()) if seen.any() else None
        return self

    def votes(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        V = np.zeros((len(X), len(self.classes_)))
        rows = np.arange(len(X))
        for tree in self.trees:
            V[rows, np.argmax(tree.value[tree.apply(X)], axis=1)] += 1
        return V

    def predict_proba(self, X) -> np.ndarray:
        # argmax of vote fractions is the majority vote, ties to the smaller code
        return self.votes(X) / len(self.trees)

    def get_state(self):
        return {"trees": [t.to_dict() for t in self.trees], "oob_score": self.oob_score}

    def set_state(self, state):
        self.trees = [TreeStructure.from_dict(t) for t in state["trees"]]
        self.oob_score = state["oob_score"]


class RandomForest(_Forest):
    family = "random_forest"

    def __init__(self, n_trees: int = 100, max_depth: int | None = None, criterion: str = "gini",
                 min_samples_split: int = 2, feature_subsample: float | str = "sqrt",
                 split_mode: str = "best", bootstrap: bool = True, seed: int = 0):
        super().__init__(n_trees, max_depth, criterion, min_samples_split, feature_subsample,
                         split_mode, bootstrap, seed)


class ExtraTrees(_Forest):
    family = "extra_trees"

    def __init__(self, n_trees: int = 100, max_depth: int | None = None, criterion: str = "gini",
                 min_samples_split: int = 2, feature_subsample: float | str = 1.0,
                 split_mode: str = "random", bootstrap: bool = False, seed: int = 0):
        super().__init__(n_trees, max_depth, criterion, min_samples_split, feature_subsample,
                         split_mode, bootstrap, seed)


def train_random_forest(X, y, n_trees=100, max_depth=None, feature_subsample="sqrt", seed=0,
                        bootstrap=True) -> RandomForest:
    return RandomForest(n_trees=n_trees, max_depth=max_depth, feature_subsample=feature_subsample,
                        seed=seed, bootstrap=bootstrap).fit(X, y)


def train_extra_trees(X, y, n_trees=100, max_depth=None, seed=0, bootstrap=False) -> ExtraTrees:
    return ExtraTrees(n_trees=n_trees, max_depth=max_depth, seed=seed, bootstrap=bootstrap).fit(X, y)
