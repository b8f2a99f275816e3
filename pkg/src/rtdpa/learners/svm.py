"""Soft-margin kernel SVM solved in the dual by SMO.

Working pairs are chosen by the maximal-violating-pair rule with second-order
gain for the second index, and the optimizer stops once the KKT violation
``m(alpha) - M(alpha)`` drops below ``tol``. Multiclass problems are split
one-vs-rest; a two-class problem uses a single subproblem and reduces to
``sign(sum_i alpha_i y_i K(x, x_i) + b)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from rtdpa.errors import RtdpaWarning, SchemaError
from rtdpa.learners.base import Classifier, softmax

KERNELS = ("linear", "polynomial", "rbf", "sigmoid", "laplacian", "exponential")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    sigma: float | None = None   # None: chosen from the training data at fit time
    c: float = 1.0
    alpha: float = 0.1
    degree: int = 3

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise SchemaError(f"unknown kernel {self.kind!r}; choose from {KERNELS}")
        if self.sigma is not None and self.sigma <= 0:
            raise SchemaError("kernel sigma must be positive")
        if int(self.degree) != self.degree or self.degree < 1:
            raise SchemaError("polynomial degree must be a positive integer")

    def to_dict(self):
        return {"kind": self.kind, "sigma": self.sigma, "c": self.c, "alpha": self.alpha, "degree": self.degree}


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"kernel inputs differ in dimension: {A.shape[1]} vs {B.shape[1]}")
    kind = spec.kind
    if kind == "linear":
        return A @ B.T
    if kind == "polynomial":
        return (A @ B.T + spec.c) ** spec.degree
    if kind == "sigmoid":
        return np.tanh(spec.alpha * (A @ B.T) + spec.c)
    sigma = 1.0 if spec.sigma is None else spec.sigma
    if kind == "rbf":
        return np.exp(-cdist(A, B, "sqeuclidean") / (2 * sigma ** 2))
    dist = cdist(A, B, "euclidean")
    if kind == "laplacian":
        return np.exp(-dist / sigma)
    return np.exp(-dist / (2 * sigma ** 2))    # exponential


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError("kernel inputs differ in dimension")
    return float(kernel_matrix(spec, x[None, :], x2[None, :])[0, 0])


@dataclass
class SmoResult:
    alpha: np.ndarray
    b: float
    iterations: int
    converged: bool
    gap: float


class _KernelRows:
    """Lazily computed kernel rows with a bounded cache."""

    def __init__(self, spec, X, cache_bytes=64 * 2 ** 20):
        self.spec, self.X = spec, X
        self.cache: dict[int, np.ndarray] = {}
        self.max_rows = max(2, cache_bytes // (8 * max(len(X), 1)))
        if spec.kind in ("rbf", "laplacian", "exponential"):
            self.diag = np.ones(len(X))
        else:
            self.diag = np.array([kernel_matrix(spec, X[i:i + 1], X[i:i + 1])[0, 0] for i in range(len(X))])

    def row(self, i: int) -> np.ndarray:
        r = self.cache.get(i)
        if r is None:
            if len(self.cache) >= self.max_rows:
                self.cache.pop(next(iter(self.cache)))
            r = kernel_matrix(self.spec, self.X[i:i + 1], self.X)[0]
            self.cache[i] = r
        return r


def smo_solve(rows: _KernelRows, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int = 100_000) -> SmoResult:
    """Minimize ``0.5 a'Qa - e'a`` s.t. ``0 <= a <= C``, ``y'a = 0``; y in {-1, +1}."""
    n = len(y)
    alpha = np.zeros(n)
    G = -np.ones(n)            # gradient Q a - e
    diag = rows.diag
    tau = 1e-12
    it = 0
    gap = np.inf
    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(yG[up])])
        m_val = yG[i]
        M_val = yG[low].min()
        gap = m_val - M_val
        if gap < tol:
            break
        Ki = rows.row(i)
        cand = low & (yG < m_val)
        b_t = m_val - yG[cand]
        a_t = diag[i] + diag[cand] - 2 * Ki[cand]
        a_t = np.where(a_t > 0, a_t, tau)
        j = int(np.flatnonzero(cand)[np.argmin(-(b_t * b_t) / a_t)])
        Kj = rows.row(j)
        yi, yj = y[i], y[j]
        ai_old, aj_old = alpha[i], alpha[j]
        quad = diag[i] + diag[j] - 2 * Ki[j]
        if quad <= 0:
            quad = tau
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        # Q_it = y_i y_t K_it
        G += y * (yi * Ki * (ai - ai_old) + yj * Kj * (aj - aj_old))
        it += 1
    b = _intercept(alpha, y, G, C)
    return SmoResult(alpha, b, it, gap < tol, float(gap))


def _intercept(alpha, y, G, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = yG[free].mean()
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (alpha <= 0) & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (alpha <= 0) & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = (ub + lb) / 2 if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    return float(-rho)


@dataclass
class BinarySvm:
    support: np.ndarray      # indices into the training matrix
    dual_coef: np.ndarray    # alpha_i * y_i for the support vectors
    alpha: np.ndarray        # full alpha vector (for diagnostics)
    b: float
    converged: bool


class KernelSVM(Classifier):
    family = "svm"

    def __init__(self, kernel: str = "rbf", sigma: float | None = None, c: float = 1.0,
                 alpha: float = 0.1, degree: int = 3, C: float = 1.0, tol: float = 1e-3,
                 max_iter: int = 100_000):
        super().__init__(kernel=kernel, sigma=sigma, c=c, alpha=alpha, degree=degree,
                         C=C, tol=tol, max_iter=max_iter)
        self.spec = KernelSpec(kernel, sigma, c, alpha, degree)

    def fit(self, X, y):
        X, idx = self._prepare(X, y)
        K = len(self.classes_)
        if K < 2:
            raise SchemaError("SVM needs at least two classes")
        if self.spec.sigma is None and self.spec.kind in ("rbf", "laplacian", "exponential"):
            # 1 / (2 sigma^2) = 1 / (m * var(X)), the usual "scale" width
            spread = float(X.var()) * X.shape[1]
            sigma = float(np.sqrt(spread / 2)) if spread > 0 else 1.0
            self.spec = KernelSpec(self.spec.kind, sigma, self.spec.c, self.spec.alpha, self.spec.degree)
        rows = _KernelRows(self.spec, X)
        targets = [1] if K == 2 else range(K)
        C = self.params["C"]
        self.machines = []
        for k in targets:
            yk = np.where(idx == k, 1.0, -1.0)
            res = smo_solve(rows, yk, C, self.params["tol"], self.params["max_iter"])
            if not res.converged:
                warnings.warn(f"SMO stopped after {res.iterations} iterations with KKT gap {res.gap:.3g}",
                              RtdpaWarning, stacklevel=2)
            sv = np.flatnonzero(res.alpha > 1e-8)
            self.machines.append(BinarySvm(sv, res.alpha[sv] * yk[sv], res.alpha, res.b, res.converged))
        keep = np.unique(np.concatenate([m.support for m in self.machines]))
        remap = {int(old): new for new, old in enumerate(keep)}
        self.support_vectors = X[keep]
        for m in self.machines:
            m.support = np.array([remap[int(s)] for s in m.support], dtype=np.int64)
        return self

    def decision_function(self, X) -> np.ndarray:
        """Per-machine scores ``sum_i alpha_i y_i K(x, x_i) + b``."""
        X = self._check_fitted(X)
        Kx = kernel_matrix(self.spec, X, self.support_vectors) if len(self.support_vectors) else np.zeros((len(X), 0))
        return np.column_stack([Kx[:, m.support] @ m.dual_coef + m.b for m in self.machines])

    def class_scores(self, X) -> np.ndarray:
        f = self.decision_function(X)
        if len(self.classes_) == 2:
            return np.column_stack([-f[:, 0], f[:, 0]])
        return f

    def predict_proba(self, X) -> np.ndarray:
        # a scoring convention for AUC, not a calibrated probability
        return softmax(self.class_scores(X))

    def get_state(self):
        return {
            "kernel": self.spec.to_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "machines": [{"support": m.support.tolist(), "dual_coef": m.dual_coef.tolist(),
                          "b": m.b, "converged": m.converged} for m in self.machines],
        }

    def set_state(self, state):
        self.spec = KernelSpec(**state["kernel"])
        sv = np.asarray(state["support_vectors"], dtype=float)
        self.support_vectors = sv.reshape(len(sv), self.n_features_)
        self.machines = [BinarySvm(np.asarray(m["support"], dtype=np.int64),
                                   np.asarray(m["dual_coef"], dtype=float), np.empty(0),
                                   float(m["b"]), bool(m["converged"])) for m in state["machines"]]


def train_svm(X, y, spec: KernelSpec = KernelSpec(), C: float = 1.0, tol: float = 1e-3,
              max_iter: int = 100_000) -> KernelSVM:
    return KernelSVM(kernel=spec.kind, sigma=spec.sigma, c=spec.c, alpha=spec.alpha,
                     degree=spec.degree, C=C, tol=tol, max_iter=max_iter).fit(X, y)


def svm_decision(model: KernelSVM, X) -> np.ndarray:
    return model.class_scores(X)
