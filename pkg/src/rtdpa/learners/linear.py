"""Multinomial (softmax) logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from rtdpa.errors import TrainingError
from rtdpa.learners.base import Classifier, one_hot, softmax


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def loss_and_grad(theta: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy plus ``l2/2 * ||weights||^2`` and its gradient.

    ``theta`` is K x (m+1) with the bias in column 0 (not regularized);
    ``Y`` is the one-hot target matrix.
    """
    Xa = _augment(X)
    P = softmax(Xa @ theta.T)
    n = X.shape[0]
    logp = np.log(np.clip(P[Y > 0], 1e-300, None))
    W = theta[:, 1:]
    loss = -logp.sum() / n + 0.5 * l2 * float((W * W).sum())
    grad = (P - Y).T @ Xa / n
    grad[:, 1:] += l2 * W
    return loss, grad


class SoftmaxRegression(Classifier):
    family = "logistic_regression"

    def __init__(self, lr: float = 0.5, epochs: int = 300, l2: float = 1e-4):
        super().__init__(lr=lr, epochs=epochs, l2=l2)
        self.theta: np.ndarray | None = None
        self.loss_trace: list[float] = []

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        K = len(self.classes_)
        Y = one_hot(idx, K)
        theta = np.zeros((K, X.shape[1] + 1))
        lr, l2 = self.params["lr"], self.params["l2"]
        trace = []
        for epoch in range(self.params["epochs"]):
            loss, grad = loss_and_grad(theta, X, Y, l2)
            if not np.isfinite(loss):
                raise TrainingError(f"softmax regression loss became non-finite at epoch {epoch}; lower lr")
            trace.append(float(loss))
            theta = theta - lr * grad
        self.theta = theta
        self.loss_trace = trace
        return self

    def logits(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        return _augment(X) @ self.theta.T

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.logits(X))

    def get_state(self):
        return {"theta": self.theta.tolist(), "loss_trace": self.loss_trace}

    def set_state(self, state):
        self.theta = np.asarray(state["theta"], dtype=float)
        self.loss_trace = list(state["loss_trace"])


def train_softmax(X, y, lr=0.5, epochs=300, l2=1e-4) -> SoftmaxRegression:
    return SoftmaxRegression(lr=lr, epochs=epochs, l2=l2).fit(X, y)


def predict_proba_softmax(model: SoftmaxRegression, X) -> np.ndarray:
    return model.predict_proba(X)
