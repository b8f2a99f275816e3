"""Exact k-nearest-neighbour majority vote (Euclidean distance)."""

from __future__ import annotations

import numpy as np

from rtdpa.errors import DataError, SchemaError
from rtdpa.learners.base import Classifier
from rtdpa.neighbors import NeighborIndex


class KNN(Classifier):
    family = "knn"

    def __init__(self, k: int = 5):
        if k < 1:
            raise SchemaError("k must be at least 1")
        super().__init__(k=k)

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        if self.params["k"] > len(X):
            raise DataError(f"k={self.params['k']} exceeds the {len(X)} training rows")
        self.X_train = X
        self.y_idx = idx
        return self

    def vote_counts(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        k = self.params["k"]
        nn = NeighborIndex(self.X_train).kneighbors(X, k)
        K = len(self.classes_)
        counts = np.zeros((len(X), K))
        labels = self.y_idx[nn]
        for j in range(k):
            np.add.at(counts, (np.arange(len(X)), labels[:, j]), 1.0)
        return counts

    def predict_proba(self, X) -> np.ndarray:
        # argmax of vote fractions picks the smallest class code on ties
        return self.vote_counts(X) / self.params["k"]

    def get_state(self):
        return {"X": self.X_train.tolist(), "y": self.y_idx.tolist()}

    def set_state(self, state):
        self.X_train = np.asarray(state["X"], dtype=float).reshape(-1, self.n_features_)
        self.y_idx = np.asarray(state["y"], dtype=np.int64)


def train_knn(X, y, k=5) -> KNN:
    return KNN(k).fit(X, y)


def knn_predict(model: KNN, X) -> np.ndarray:
    return model.predict(X)
