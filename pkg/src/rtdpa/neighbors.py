"""Exact brute-force k-nearest-neighbour search under Euclidean distance.

Ties are broken by ascending point index, so results are deterministic and
can be checked against a naive scan.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

_CHUNK = 512


def _ordered(dist_row: np.ndarray, k: int) -> np.ndarray:
    n = len(dist_row)
    if k >= n:
        return np.argsort(dist_row, kind="stable")
    kth = np.partition(dist_row, k - 1)[k - 1]
    cand = np.flatnonzero(dist_row <= kth)
    order = np.argsort(dist_row[cand], kind="stable")
    return cand[order[:k]]


class NeighborIndex:
    def __init__(self, points):
        self.points = np.ascontiguousarray(np.asarray(points, dtype=float))
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-D matrix")

    def __len__(self):
        return len(self.points)

    def sq_distances(self, queries) -> np.ndarray:
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        return cdist(queries, self.points, "sqeuclidean")

    def query(self, x, k: int, exclude: int | None = None) -> np.ndarray:
        """Indices of the ``k`` nearest points sorted by (distance, index)."""
        d = self.sq_distances(x)[0]
        if exclude is not None:
            d[exclude] = np.inf
            k = min(k, len(d) - 1)
        return _ordered(d, min(k, len(d)))

    def kneighbors(self, queries, k: int, exclude_self: bool = False) -> np.ndarray:
        """Row-wise neighbour lists for many queries.

        With ``exclude_self`` the queries must be the indexed points themselves
        (query ``i`` is point ``i``) and each point is removed from its own list.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        n = len(self.points)
        k_eff = min(k, n - 1 if exclude_self else n)
        out = np.empty((len(queries), k_eff), dtype=np.int64)
        if k_eff == 0:
            return out
        for start in range(0, len(queries), _CHUNK):
            block = self.sq_distances(queries[start:start + _CHUNK])
            if exclude_self:
                rows = np.arange(block.shape[0])
                block[rows, rows + start] = np.inf
            for r in range(block.shape[0]):
                out[start + r] = _ordered(block[r], k_eff)
        return out
