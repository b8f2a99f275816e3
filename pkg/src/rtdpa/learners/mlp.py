"""Feedforward network with a single hidden layer.

hidden = act(X W1 + b1), output = softmax(hidden W2 + b2), trained by
full-batch backpropagation on mean cross-entropy.
"""

from __future__ import annotations

import numpy as np

from rtdpa.errors import SchemaError, TrainingError
from rtdpa.learners.base import Classifier, one_hot, softmax

ACTIVATIONS = ("tanh", "logistic")


def _act(Z, kind):
    if kind == "tanh":
        return np.tanh(Z)
    return 1.0 / (1.0 + np.exp(-Z))


def _act_grad(H, kind):
    # derivative expressed through the activation value
    if kind == "tanh":
        return 1.0 - H * H
    return H * (1.0 - H)


def mlp_forward_params(params: dict, X: np.ndarray, activation: str = "tanh"):
    H = _act(X @ params["W1"] + params["b1"], activation)
    return H, softmax(H @ params["W2"] + params["b2"])


def loss_and_grads(params: dict, X: np.ndarray, Y: np.ndarray, activation: str = "tanh"):
    """Mean cross-entropy and gradients for W1, b1, W2, b2."""
    n = X.shape[0]
    H, P = mlp_forward_params(params, X, activation)
    loss = -np.log(np.clip(P[Y > 0], 1e-300, None)).sum() / n
    dZ2 = (P - Y) / n
    dH = dZ2 @ params["W2"].T
    dZ1 = dH * _act_grad(H, activation)
    grads = {
        "W1": X.T @ dZ1,
        "b1": dZ1.sum(axis=0),
        "W2": H.T @ dZ2,
        "b2": dZ2.sum(axis=0),
    }
    return loss, grads


class MLP(Classifier):
    family = "mlp"

    def __init__(self, hidden_units: int = 16, lr: float = 0.5, epochs: int = 500, seed: int = 0,
                 activation: str = "tanh"):
        if hidden_units < 1:
            raise SchemaError("hidden_units must be at least 1")
        if activation not in ACTIVATIONS:
            raise SchemaError(f"unknown activation {activation!r}")
        super().__init__(hidden_units=hidden_units, lr=lr, epochs=epochs, seed=seed, activation=activation)
        self.weights: dict | None = None
        self.loss_trace: list[float] = []

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        K = len(self.classes_)
        h = self.params["hidden_units"]
        rng = np.random.default_rng(self.params["seed"])
        w = {
            "W1": rng.uniform(-0.5, 0.5, (X.shape[1], h)),
            "b1": rng.uniform(-0.5, 0.5, h),
            "W2": rng.uniform(-0.5, 0.5, (h, K)),
            "b2": rng.uniform(-0.5, 0.5, K),
        }
        Y = one_hot(idx, K)
        lr, act = self.params["lr"], self.params["activation"]
        trace = []
        for epoch in range(self.params["epochs"]):
            loss, g = loss_and_grads(w, X, Y, act)
            if not np.isfinite(loss):
                raise TrainingError(f"network loss became non-finite at epoch {epoch}; lower lr")
            trace.append(float(loss))
            for key in w:
                w[key] = w[key] - lr * g[key]
        self.weights = w
        self.loss_trace = trace
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        return mlp_forward_params(self.weights, X, self.params["activation"])[1]

    def get_state(self):
        return {"weights": {k: v.tolist() for k, v in self.weights.items()}, "loss_trace": self.loss_trace}

    def set_state(self, state):
        w = {k: np.asarray(v, dtype=float) for k, v in state["weights"].items()}
        w["W1"] = w["W1"].reshape(self.n_features_, self.params["hidden_units"])
        self.weights = w
        self.loss_trace = list(state["loss_trace"])


def train_mlp(X, y, hidden_units=16, lr=0.5, epochs=500, seed=0, activation="tanh") -> MLP:
    return MLP(hidden_units, lr, epochs, seed, activation).fit(X, y)


def mlp_forward(model: MLP, X) -> np.ndarray:
    return model.predict_proba(X)
