from __future__ import annotations

import numpy as np

from rtdpa.errors import DataError, TrainingError


def softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def one_hot(idx: np.ndarray, k: int) -> np.ndarray:
    Y = np.zeros((len(idx), k))
    Y[np.arange(len(idx)), idx] = 1.0
    return Y


def check_X(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DataError("feature matrix must be 2-D")
    if n_features is not None and X.shape[1] != n_features:
        raise DataError(f"model expects {n_features} features, got {X.shape[1]}")
    return X


class Classifier:
    """Shared contract: ``fit``, ``predict_proba``, ``predict``, (de)serialization.

    Labels may be arbitrary integer codes; ``classes_`` holds them sorted and
    probability columns follow that order. ``predict`` is the argmax of
    ``predict_proba`` with ties going to the smaller class code.
    """

    family = "base"

    def __init__(self, **params):
        self.params = dict(params)
        self.classes_: np.ndarray | None = None
        self.n_features_: int | None = None

    def _prepare(self, X, y):
        X = check_X(X)
        y = np.asarray(y)
        if len(y) != X.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {len(y)} labels")
        if len(y) == 0:
            raise DataError("cannot fit on an empty training set")
        if not np.isfinite(X).all():
            raise DataError("training features contain non-finite values")
        self.classes_, idx = np.unique(y, return_inverse=True)
        self.n_features_ = X.shape[1]
        return X, idx

    def _check_fitted(self, X):
        if self.classes_ is None:
            raise TrainingError(f"{self.family} model is not fitted")
        return check_X(X, self.n_features_)

    def fit(self, X, y):
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def get_state(self) -> dict:
        raise NotImplementedError

    def set_state(self, state: dict) -> None:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.params,
            "classes": self.classes_.tolist(),
            "n_features": self.n_features_,
            "state": self.get_state(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Classifier":
        model = cls(**obj["params"])
        model.classes_ = np.asarray(obj["classes"], dtype=np.int64)
        model.n_features_ = obj["n_features"]
        model.set_state(obj["state"])
        return model

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"
