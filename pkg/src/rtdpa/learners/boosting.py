"""Boosted tree ensembles.

AdaBoost uses the SAMME rule: learner weight ``ln((1-e)/e) + ln(K-1)`` and
sample reweighting by ``exp(weight * misclassified)``; prediction is the
class with the largest weighted vote, which at K=2 equals the sign of the
weighted sum of +/-1 outputs.

Gradient boosting minimizes multinomial deviance. Each round fits K
least-squares regression trees to ``onehot(y) - softmax(F)`` with Newton
leaf values; the round is then scaled by ``learning_rate`` times a
backtracked stage weight so that training deviance never increases.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from rtdpa.errors import RtdpaWarning, SchemaError
from rtdpa.learners.base import Classifier, one_hot, softmax
from rtdpa.learners.tree import GROWTH, SplitConfig, TreeStructure, build_classification_tree, build_regression_tree

HESSIAN_FLOOR = 1e-12


def samme_alpha(error: float, n_classes: int) -> float:
    return math.log((1.0 - error) / error) + math.log(n_classes - 1)


class AdaBoost(Classifier):
    family = "adaboost"

    def __init__(self, n_rounds: int = 50, stump_depth: int = 1, criterion: str = "gini"):
        if n_rounds < 1:
            raise SchemaError("n_rounds must be at least 1")
        super().__init__(n_rounds=n_rounds, stump_depth=stump_depth, criterion=criterion)
        self.learners: list[TreeStructure] = []
        self.weights: list[float] = []
        self.errors: list[float] = []
        self.weight_sums: list[float] = []

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        n, K = len(idx), len(self.classes_)
        if K < 2:
            raise SchemaError("boosting needs at least two classes")
        config = SplitConfig(self.params["criterion"])
        w = np.full(n, 1.0 / n)
        self.learners, self.weights, self.errors, self.weight_sums = [], [], [], []
        for t in range(self.params["n_rounds"]):
            tree = build_classification_tree(X, idx, K, config, self.params["stump_depth"], 2,
                                             sample_weight=w)
            miss = np.argmax(tree.value[tree.apply(X)], axis=1) != idx
            err = float(w[miss].sum())
            self.errors.append(err)
            if err >= 1.0 - 1.0 / K:
                if t == 0:
                    warnings.warn(f"first weak learner is no better than chance (error {err:.4f}); "
                                  "keeping it as the only learner", RtdpaWarning, stacklevel=2)
                    self.learners.append(tree)
                    self.weights.append(1.0)
                break
            if err <= 0.0:
                # a perfect learner outvotes everything before it
                self.learners.append(tree)
                self.weights.append(1.0 + sum(self.weights))
                break
            alpha = samme_alpha(err, K)
            self.learners.append(tree)
            self.weights.append(alpha)
            w = w * np.exp(alpha * miss)
            w = w / w.sum()
            self.weight_sums.append(float(w.sum()))
        return self

    def votes(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        V = np.zeros((len(X), len(self.classes_)))
        rows = np.arange(len(X))
        for tree, a in zip(self.learners, self.weights):
            V[rows, np.argmax(tree.value[tree.apply(X)], axis=1)] += a
        return V

    def predict_proba(self, X) -> np.ndarray:
        V = self.votes(X)
        return V / V.sum(axis=1, keepdims=True)

    def get_state(self):
        return {"learners": [t.to_dict() for t in self.learners], "weights": self.weights,
                "errors": self.errors}

    def set_state(self, state):
        self.learners = [TreeStructure.from_dict(t) for t in state["learners"]]
        self.weights = [float(a) for a in state["weights"]]
        self.errors = [float(e) for e in state["errors"]]


def deviance(F: np.ndarray, idx: np.ndarray) -> float:
    """Mean multinomial deviance (negative log-likelihood) of raw scores ``F``."""
    Z = F - F.max(axis=1, keepdims=True)
    logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(idx)), idx].mean())


class GradientBoosting(Classifier):
    family = "gradient_boosting"

    def __init__(self, n_rounds: int = 100, learning_rate: float = 0.1, max_depth: int | None = 3,
                 growth: str = "level_wise", max_leaves: int | None = None, min_samples_split: int = 2):
        if growth not in GROWTH:
            raise SchemaError(f"unknown growth policy {growth!r}; choose from {GROWTH}")
        if learning_rate < 0:
            raise SchemaError("learning_rate must be non-negative")
        super().__init__(n_rounds=n_rounds, learning_rate=learning_rate, max_depth=max_depth,
                         growth=growth, max_leaves=max_leaves, min_samples_split=min_samples_split)
        self.init: np.ndarray | None = None
        self.stages: list[list[TreeStructure]] = []
        self.stage_weights: list[float] = []
        self.deviance_trace: list[float] = []

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        n, K = len(idx), len(self.classes_)
        if K < 2:
            raise SchemaError("boosting needs at least two classes")
        p = self.params
        Y = one_hot(idx, K)
        self.init = np.log(np.bincount(idx, minlength=K) / n)
        F = np.tile(self.init, (n, 1))
        dev = deviance(F, idx)
        trace = [dev]
        self.stages, self.stage_weights = [], []
        factor = (K - 1) / K
        floored = False
        for _ in range(p["n_rounds"]):
            P = softmax(F)
            R = Y - P
            H = P * (1.0 - P)
            U = np.zeros_like(F)
            trees = []
            for k in range(K):
                r, h = R[:, k], H[:, k]

                def leaf(rows, r=r, h=h):
                    nonlocal floored
                    den = h[rows].sum()
                    if den < HESSIAN_FLOOR:
                        floored = True
                        den = HESSIAN_FLOOR
                    return factor * r[rows].sum() / den

                tree = build_regression_tree(X, r, leaf, p["growth"], p["max_depth"], p["max_leaves"],
                                             p["min_samples_split"])
                trees.append(tree)
                U[:, k] = tree.value[tree.apply(X), 0]
            step = p["learning_rate"]
            weight = 1.0
            new_dev = deviance(F + step * U, idx)
            halvings = 0
            while not new_dev <= dev and halvings < 50:
                weight /= 2.0
                halvings += 1
                new_dev = deviance(F + step * weight * U, idx)
            if not new_dev <= dev:
                weight, new_dev = 0.0, dev
            F = F + step * weight * U
            dev = new_dev
            trace.append(dev)
            self.stages.append(trees)
            self.stage_weights.append(weight)
        if floored:
            warnings.warn("leaf hessian fell below the floor; leaf values were clipped by the floor",
                          RtdpaWarning, stacklevel=2)
        self.deviance_trace = trace
        return self

    def raw_scores(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        F = np.tile(self.init, (len(X), 1))
        lr = self.params["learning_rate"]
        for trees, weight in zip(self.stages, self.stage_weights):
            if weight == 0.0:
                continue
            for k, tree in enumerate(trees):
                F[:, k] += lr * weight * tree.value[tree.apply(X), 0]
        return F

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.raw_scores(X))

    def get_state(self):
        return {"init": self.init.tolist(), "stage_weights": self.stage_weights,
                "stages": [[t.to_dict() for t in trees] for trees in self.stages],
                "deviance_trace": self.deviance_trace}

    def set_state(self, state):
        self.init = np.asarray(state["init"], dtype=float)
        self.stage_weights = [float(w) for w in state["stage_weights"]]
        self.stages = [[TreeStructure.from_dict(t) for t in trees] for trees in state["stages"]]
        self.deviance_trace = [float(d) for d in state["deviance_trace"]]


def train_adaboost(X, y, n_rounds=50, stump_depth=1) -> AdaBoost:
    return AdaBoost(n_rounds, stump_depth).fit(X, y)


def train_gradient_boosting(X, y, n_rounds=100, learning_rate=0.1, max_depth=3, growth="level_wise",
                            max_leaves=None) -> GradientBoosting:
    return GradientBoosting(n_rounds, learning_rate, max_depth, growth, max_leaves).fit(X, y)


def boosted_predict(model: Classifier, X):
    """Labels and class scores; the label is always the argmax of the scores."""
    scores = model.predict_proba(X)
    return model.classes_[np.argmax(scores, axis=1)], scores
