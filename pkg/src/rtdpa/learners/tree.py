"""CART trees: binary threshold splits, ``x <= t`` goes left.

Split search in ``best`` mode scans the midpoints between consecutive
distinct values of every candidate feature; ``random`` mode draws a single
uniform threshold per feature. Among all candidates the highest gain wins;
gains within 1e-12 of the best are treated as ties and resolved toward the
lower feature index, then the lower threshold. A node is split only when the
winning gain exceeds 1e-12.

The same builder grows regression trees (used by gradient boosting) either
depth-first to a depth limit or best-first up to a leaf budget.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from rtdpa.errors import SchemaError
from rtdpa.learners.base import Classifier, check_X

CRITERIA = ("gini", "entropy")
SPLIT_MODES = ("best", "random")
GROWTH = ("level_wise", "leaf_wise")
GAIN_TOL = 1e-12


def _impurity_rows(C: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of each row of a (weighted) class-count matrix."""
    tot = C.sum(axis=1, keepdims=True)
    P = np.divide(C, tot, out=np.zeros_like(C, dtype=float), where=tot > 0)
    if criterion == "gini":
        return 1.0 - (P * P).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.where(P > 0, P * np.log2(np.where(P > 0, P, 1.0)), 0.0)
    return -L.sum(axis=1)


def impurity(counts, criterion: str = "gini") -> float:
    if criterion not in CRITERIA:
        raise SchemaError(f"unknown criterion {criterion!r}")
    c = np.asarray(counts, dtype=float)[None, :]
    if c.sum() <= 0:
        raise ValueError("impurity of an empty node")
    return float(_impurity_rows(c, criterion)[0])


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


@dataclass(frozen=True)
class SplitConfig:
    criterion: str = "gini"
    feature_subsample: float | str = 1.0    # fraction of features per node, or "sqrt"
    split_mode: str = "best"

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise SchemaError(f"unknown criterion {self.criterion!r}")
        if self.split_mode not in SPLIT_MODES:
            raise SchemaError(f"unknown split mode {self.split_mode!r}")
        fs = self.feature_subsample
        if fs != "sqrt" and not (isinstance(fs, (int, float)) and 0 < fs <= 1):
            raise SchemaError("feature_subsample must be in (0, 1] or 'sqrt'")

    def n_features(self, m: int) -> int:
        if self.feature_subsample == "sqrt":
            return max(1, int(np.sqrt(m)))
        return max(1, min(m, int(self.feature_subsample * m)))


def _pick(candidates) -> Split | None:
    """Resolve (feature, thresholds, gains) candidates by the tie rules."""
    best = -np.inf
    for _, _, gains in candidates:
        if len(gains):
            best = max(best, float(gains.max()))
    if not best > GAIN_TOL:
        return None
    for f, thresholds, gains in candidates:   # features in ascending order
        ok = np.flatnonzero(gains >= best - GAIN_TOL)
        if len(ok):
            j = ok[np.argmin(thresholds[ok])]
            return Split(int(f), float(thresholds[j]), float(gains[j]))
    return None


def _midpoints(xs: np.ndarray, pos: np.ndarray) -> np.ndarray:
    mid = (xs[pos] + xs[pos + 1]) / 2.0
    # adjacent floats: the midpoint may round up onto the right value
    return np.where(mid < xs[pos + 1], mid, xs[pos])


def _classification_candidates(X, W, idx, features, criterion, mode, rng):
    """Per-feature candidate thresholds and impurity decreases.

    ``W`` is the n x K matrix of one-hot labels scaled by sample weight.
    """
    Wn = W[idx]
    total = Wn.sum(axis=0)
    w = total.sum()
    parent = _impurity_rows(total[None, :], criterion)[0]
    out = []
    for f in features:
        x = X[idx, f]
        if mode == "random":
            lo, hi = x.min(), x.max()
            if not lo < hi:
                continue
            t = rng.uniform(lo, hi)
            left = Wn[x <= t].sum(axis=0)[None, :]
            thresholds = np.array([t])
        else:
            order = np.argsort(x, kind="stable")
            xs = x[order]
            pos = np.flatnonzero(xs[:-1] < xs[1:])
            if not len(pos):
                continue
            left = np.cumsum(Wn[order], axis=0)[pos]
            thresholds = _midpoints(xs, pos)
        right = total - left
        wl = left.sum(axis=1)
        wr = right.sum(axis=1)
        gains = parent - (wl * _impurity_rows(left, criterion) + wr * _impurity_rows(right, criterion)) / w
        out.append((f, thresholds, gains))
    return out


def _regression_candidates(X, g, idx, features):
    """Squared-error reduction ``S_L^2/n_L + S_R^2/n_R - S^2/n`` per threshold."""
    gn = g[idx]
    n = len(idx)
    S = gn.sum()
    base = S * S / n
    out = []
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        pos = np.flatnonzero(xs[:-1] < xs[1:])
        if not len(pos):
            continue
        SL = np.cumsum(gn[order])[pos]
        nL = pos + 1.0
        gains = SL * SL / nL + (S - SL) ** 2 / (n - nL) - base
        out.append((f, _midpoints(xs, pos), gains))
    return out


def best_split(X, y, samples=None, config: SplitConfig = SplitConfig(), rng=None,
               sample_weight=None, n_classes: int | None = None) -> Split | None:
    """Best threshold split of ``samples`` (default: all rows).

    ``y`` holds class indices ``0..K-1``. Returns None when no split has a
    gain above 1e-12.
    """
    X = check_X(X)
    y = np.asarray(y, dtype=np.int64)
    K = int(n_classes if n_classes is not None else y.max() + 1)
    idx = np.arange(len(y)) if samples is None else np.asarray(samples, dtype=np.int64)
    W = np.zeros((len(y), K))
    W[np.arange(len(y)), y] = 1.0 if sample_weight is None else np.asarray(sample_weight, dtype=float)
    rng = rng if rng is not None else np.random.default_rng(0)
    features = _sample_features(X.shape[1], config, rng)
    return _pick(_classification_candidates(X, W, idx, features, config.criterion, config.split_mode, rng))


def _sample_features(m: int, config: SplitConfig, rng) -> np.ndarray:
    k = config.n_features(m)
    if k >= m:
        return np.arange(m)
    return np.sort(rng.choice(m, size=k, replace=False))


@dataclass
class TreeStructure:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray        # n_nodes x K class weights, or n_nodes x 1 regression output
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):     # children always follow their parent
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = np.arange(len(X))
        while len(active):
            f = self.feature[node[active]]
            inner = f >= 0
            active = active[inner]
            if not len(active):
                break
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return node

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TreeStructure":
        value = np.asarray(obj["value"], dtype=float)
        return cls(
            np.asarray(obj["feature"], dtype=np.int64),
            np.asarray(obj["threshold"], dtype=float),
            np.asarray(obj["left"], dtype=np.int64),
            np.asarray(obj["right"], dtype=np.int64),
            value.reshape(len(obj["feature"]), -1),
            np.asarray(obj["n_samples"], dtype=np.int64),
        )


class _Builder:
    def __init__(self, split_fn, leaf_fn, stop_fn):
        self.split_fn, self.leaf_fn, self.stop_fn = split_fn, leaf_fn, stop_fn
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.value, self.n_samples = [], []

    def _new(self, idx):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(self.leaf_fn(idx))
        self.n_samples.append(len(idx))
        return len(self.feature) - 1

    def _split(self, node, idx, split, X):
        mask = X[idx, split.feature] <= split.threshold
        self.feature[node] = split.feature
        self.threshold[node] = split.threshold
        li = self._new(idx[mask])
        ri = self._new(idx[~mask])
        self.left[node], self.right[node] = li, ri
        return (li, idx[mask]), (ri, idx[~mask])

    def grow_depth_first(self, X, idx, max_depth):
        root = self._new(idx)
        stack = [(root, idx, 0)]
        while stack:
            node, rows, depth = stack.pop()
            if (max_depth is not None and depth >= max_depth) or self.stop_fn(rows):
                continue
            split = self.split_fn(rows)
            if split is None:
                continue
            (li, lrows), (ri, rrows) = self._split(node, rows, split, X)
            # right pushed first so the left subtree is expanded first
            stack.append((ri, rrows, depth + 1))
            stack.append((li, lrows, depth + 1))

    def grow_best_first(self, X, idx, max_leaves, max_depth):
        root = self._new(idx)
        heap = []
        counter = 0

        def push(node, rows, depth):
            nonlocal counter
            if (max_depth is not None and depth >= max_depth) or self.stop_fn(rows):
                return
            split = self.split_fn(rows)
            if split is not None:
                heapq.heappush(heap, (-split.gain, counter, node, rows, depth, split))
                counter += 1

        push(root, idx, 0)
        leaves = 1
        while heap and leaves < max_leaves:
            _, _, node, rows, depth, split = heapq.heappop(heap)
            (li, lrows), (ri, rrows) = self._split(node, rows, split, X)
            leaves += 1
            push(li, lrows, depth + 1)
            push(ri, rrows, depth + 1)

    def result(self) -> TreeStructure:
        return TreeStructure(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=float),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.vstack(self.value),
            np.asarray(self.n_samples, dtype=np.int64),
        )


def build_classification_tree(X, yidx, n_classes, config: SplitConfig = SplitConfig(),
                              max_depth: int | None = None, min_samples_split: int = 2,
                              rng=None, sample_weight=None, samples=None) -> TreeStructure:
    rng = rng if rng is not None else np.random.default_rng(0)
    n = len(yidx)
    W = np.zeros((n, n_classes))
    W[np.arange(n), yidx] = 1.0 if sample_weight is None else sample_weight
    m = X.shape[1]

    def split_fn(rows):
        features = _sample_features(m, config, rng)
        return _pick(_classification_candidates(X, W, rows, features, config.criterion,
                                                config.split_mode, rng))

    def leaf_fn(rows):
        return W[rows].sum(axis=0)

    def stop_fn(rows):
        if len(rows) < min_samples_split:
            return True
        return np.count_nonzero(W[rows].sum(axis=0)) <= 1

    b = _Builder(split_fn, leaf_fn, stop_fn)
    b.grow_depth_first(X, np.arange(n) if samples is None else np.asarray(samples), max_depth)
    return b.result()


def build_regression_tree(X, target, leaf_value, growth: str = "level_wise", max_depth: int | None = 3,
                          max_leaves: int | None = None, min_samples_split: int = 2) -> TreeStructure:
    """Least-squares regression tree on ``target``; ``leaf_value(rows)`` sets each leaf output."""
    if growth not in GROWTH:
        raise SchemaError(f"unknown growth policy {growth!r}")
    m = X.shape[1]
    features = np.arange(m)

    def split_fn(rows):
        return _pick(_regression_candidates(X, target, rows, features))

    def leaf_fn(rows):
        return np.array([leaf_value(rows)])

    def stop_fn(rows):
        return len(rows) < min_samples_split

    b = _Builder(split_fn, leaf_fn, stop_fn)
    idx = np.arange(len(target))
    if growth == "level_wise":
        b.grow_depth_first(X, idx, max_depth)
    else:
        b.grow_best_first(X, idx, max_leaves if max_leaves is not None else 2 ** (max_depth or 3), max_depth)
    return b.result()


def majority_vote(predictions) -> np.ndarray | int:
    """Most frequent label per column; ties go to the smallest label.

    ``predictions`` is a sequence of labels (one per voter) or a
    voters x rows matrix.
    """
    P = np.asarray(predictions)
    if P.size == 0:
        raise ValueError("majority vote needs at least one prediction")
    single = P.ndim == 1
    if single:
        P = P[:, None]
    labels, inv = np.unique(P, return_inverse=True)
    inv = inv.reshape(P.shape)
    counts = np.zeros((P.shape[1], len(labels)), dtype=np.int64)
    for row in inv:
        counts[np.arange(P.shape[1]), row] += 1
    out = labels[np.argmax(counts, axis=1)]
    return out[0].item() if single else out


class DecisionTree(Classifier):
    family = "decision_tree"

    def __init__(self, criterion: str = "gini", max_depth: int | None = None, min_samples_split: int = 2,
                 feature_subsample: float | str = 1.0, split_mode: str = "best", seed: int = 0):
        super().__init__(criterion=criterion, max_depth=max_depth, min_samples_split=min_samples_split,
                         feature_subsample=feature_subsample, split_mode=split_mode, seed=seed)
        self.config = SplitConfig(criterion, feature_subsample, split_mode)
        self.tree: TreeStructure | None = None

    def fit(self, X, y, sample_weight=None):
        X, idx = self._prepare(X, y)
        self.tree = build_classification_tree(
            X, idx, len(self.classes_), self.config, self.params["max_depth"],
            self.params["min_samples_split"], np.random.default_rng(self.params["seed"]), sample_weight)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        V = self.tree.value[self.tree.apply(X)]
        return V / V.sum(axis=1, keepdims=True)

    def export_text(self, feature_names=None, class_names=None) -> str:
        return export_text(self.tree, feature_names, class_names or [str(c) for c in self.classes_])

    def export_dot(self, feature_names=None, class_names=None) -> str:
        return export_dot(self.tree, feature_names, class_names or [str(c) for c in self.classes_])

    def get_state(self):
        return {"tree": self.tree.to_dict()}

    def set_state(self, state):
        self.tree = TreeStructure.from_dict(state["tree"])


def tree_predict(model: DecisionTree, X) -> np.ndarray:
    return model.predict(X)


def _node_label(tree, i, feature_names):
    f = int(tree.feature[i])
    name = feature_names[f] if feature_names else f"x[{f}]"
    return f"{name} <= {tree.threshold[i]:.4f}"


def _leaf_label(tree, i, class_names):
    v = tree.value[i]
    if class_names is None or len(v) == 1:
        return f"value: {v[0]:.6g}" if len(v) == 1 else f"value: {v.tolist()}"
    return f"class: {class_names[int(np.argmax(v))]}"


def export_text(tree: TreeStructure, feature_names=None, class_names=None) -> str:
    lines = []

    def walk(i, depth):
        pad = "|   " * depth + "|--- "
        if tree.feature[i] < 0:
            lines.append(pad + _leaf_label(tree, i, class_names))
            return
        name = _node_label(tree, i, feature_names)
        lines.append(pad + name)
        walk(tree.left[i], depth + 1)
        lines.append(pad + name.replace(" <= ", " >  "))
        walk(tree.right[i], depth + 1)

    walk(0, 0)
    return "\n".join(lines) + "\n"


def export_dot(tree: TreeStructure, feature_names=None, class_names=None) -> str:
    lines = ["digraph Tree {", 'node [shape=box, fontname="helvetica"];']
    for i in range(tree.n_nodes):
        if tree.feature[i] < 0:
            label = _leaf_label(tree, i, class_names)
        else:
            label = _node_label(tree, i, feature_names)
        lines.append(f'{i} [label="{label}\\nsamples = {int(tree.n_samples[i])}"];')
        if tree.feature[i] >= 0:
            lines.append(f'{i} -> {tree.left[i]} [label="True"];')
            lines.append(f'{i} -> {tree.right[i]} [label="False"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
