"""Gaussian naive Bayes.

The row-type factor of the per-type posterior is identical for every class
once a row has been routed, so it cancels and is not modelled.
"""

from __future__ import annotations

import numpy as np

from rtdpa.learners.base import Classifier, softmax


class GaussianNB(Classifier):
    family = "gaussian_nb"

    def __init__(self, var_smoothing: float = 1e-9):
        super().__init__(var_smoothing=var_smoothing)

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        K = len(self.classes_)
        m = X.shape[1]
        self.priors = np.bincount(idx, minlength=K) / len(idx)
        self.means = np.zeros((K, m))
        self.vars = np.zeros((K, m))
        for k in range(K):
            Xk = X[idx == k]
            self.means[k] = Xk.mean(axis=0)
            self.vars[k] = Xk.var(axis=0)
        max_var = float(X.var(axis=0).max()) if m else 0.0
        self.epsilon = self.params["var_smoothing"] * (max_var if max_var > 0 else 1.0)
        self.vars = self.vars + self.epsilon
        return self

    def joint_log_likelihood(self, X) -> np.ndarray:
        """``log P(C_k) + sum_j log N(x_j; mu_kj, var_kj)`` for every row and class."""
        X = self._check_fitted(X)
        out = np.empty((X.shape[0], len(self.classes_)))
        for k in range(len(self.classes_)):
            v = self.vars[k]
            ll = -0.5 * (np.log(2 * np.pi * v).sum() + (((X - self.means[k]) ** 2) / v).sum(axis=1))
            out[:, k] = np.log(self.priors[k]) + ll
        return out

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.joint_log_likelihood(X))

    def get_state(self):
        return {"priors": self.priors.tolist(), "means": self.means.tolist(),
                "vars": self.vars.tolist(), "epsilon": self.epsilon}

    def set_state(self, state):
        self.priors = np.asarray(state["priors"], dtype=float)
        self.means = np.asarray(state["means"], dtype=float)
        self.vars = np.asarray(state["vars"], dtype=float)
        self.epsilon = float(state["epsilon"])


def train_gnb(X, y) -> GaussianNB:
    return GaussianNB().fit(X, y)


def predict_gnb(model: GaussianNB, X) -> np.ndarray:
    return model.predict_proba(X)
