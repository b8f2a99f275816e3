"""Principal component analysis with explained-variance based selection."""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from rtdpa.errors import DataError, SchemaError


@dataclass(frozen=True)
class PcaModel:
    components: np.ndarray      # m x m, columns are principal directions
    eigenvalues: np.ndarray     # descending, clamped at 0
    center: np.ndarray
    explained_ratio: np.ndarray
    n_kept: int

    @property
    def n_input(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "center": self.center.tolist(),
            "explained_ratio": self.explained_ratio.tolist(),
            "n_kept": self.n_kept,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PcaModel":
        m = len(obj["center"])
        return cls(
            components=np.asarray(obj["components"], dtype=float).reshape(m, m),
            eigenvalues=np.asarray(obj["eigenvalues"], dtype=float),
            center=np.asarray(obj["center"], dtype=float),
            explained_ratio=np.asarray(obj["explained_ratio"], dtype=float),
            n_kept=int(obj["n_kept"]),
        )


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if len(nz) and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def fit_pca(X) -> PcaModel:
    """Eigendecomposition of the sample covariance of centred ``X``.

    All components are kept; narrow the model with :func:`select_components`.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("PCA input must be a 2-D matrix")
    n, m = X.shape
    if n < 2 or m < 1:
        raise DataError(f"PCA needs n >= 2 and m >= 1, got {X.shape}")
    if not np.isfinite(X).all():
        raise DataError("PCA input contains non-finite values")
    center = X.mean(axis=0)
    Xc = X - center
    cov = Xc.T @ Xc / (n - 1)
    cov = (cov + cov.T) / 2
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = _fix_signs(vecs[:, order])
    total = vals.sum()
    ratio = vals / total if total > 0 else np.full(m, 1.0 / m)
    return PcaModel(vecs, vals, center, ratio, m)


def select_components(p: PcaModel, cumulative_threshold: float | None = None,
                      fixed_count: int | None = None) -> PcaModel:
    """Keep a fixed count, or the fewest components reaching the threshold."""
    if (cumulative_threshold is None) == (fixed_count is None):
        raise SchemaError("give exactly one of cumulative_threshold or fixed_count")
    m = p.n_input
    if fixed_count is not None:
        if not 1 <= fixed_count <= m:
            raise SchemaError(f"fixed_count must lie in [1, {m}], got {fixed_count}")
        return replace(p, n_kept=int(fixed_count))
    if not 0.0 < cumulative_threshold <= 1.0:
        raise SchemaError(f"cumulative_threshold must lie in (0, 1], got {cumulative_threshold}")
    cum = np.cumsum(p.explained_ratio)
    # guard the threshold-1.0 case against cumsum rounding just below 1
    k = int(np.searchsorted(cum, cumulative_threshold - 1e-12, side="left")) + 1
    return replace(p, n_kept=min(k, m))


def project(p: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != p.n_input:
        raise DataError(f"projection expects {p.n_input} columns, got {X.shape[1]}")
    return (X - p.center) @ p.components[:, : p.n_kept]


def reconstruct(p: PcaModel, Z) -> np.ndarray:
    return np.asarray(Z) @ p.components[:, : p.n_kept].T + p.center


def scree_csv(p: PcaModel) -> str:
    buf = io.StringIO()
    buf.write("component,eigenvalue,explained_ratio,cumulative\n")
    cum = np.cumsum(p.explained_ratio)
    for i, (ev, r, c) in enumerate(zip(p.eigenvalues, p.explained_ratio, cum), start=1):
        buf.write(f"{i},{float(ev)!r},{float(r)!r},{float(c)!r}\n")
    return buf.getvalue()
