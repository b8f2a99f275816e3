"""Class rebalancing: SMOTE, ADASYN, SMOTE+Tomek links and SMOTE+ENN.

Every class below the majority count is oversampled up to it. Synthetic
points are ``x + delta * (neighbour - x)`` with ``delta ~ U[0, 1)`` and the
neighbour drawn from the ``k`` nearest same-class points of ``x``.
Originals always come first, in their input order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from rtdpa.errors import RtdpaWarning, SchemaError
from rtdpa.neighbors import NeighborIndex

VARIANTS = ("none", "smote", "adasyn", "smote_tomek", "smote_enn")


@dataclass(frozen=True)
class AugmentSpec:
    variant: str = "smote"
    k_neighbors: int = 5
    enn_k: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SchemaError(f"unknown augmentation variant {self.variant!r}; choose from {VARIANTS}")
        if self.k_neighbors < 1 or self.enn_k < 1:
            raise SchemaError("k_neighbors and enn_k must be at least 1")


@dataclass(frozen=True)
class Provenance:
    """For each synthetic row: class, source row and neighbour row (indices into the input)."""

    labels: np.ndarray
    sources: np.ndarray
    neighbors: np.ndarray
    deltas: np.ndarray


def largest_remainder(weights, total: int) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``weights``.

    Leftover units go to the largest fractional parts, lower index first.
    """
    w = np.asarray(weights, dtype=float)
    if total == 0 or w.sum() <= 0:
        return np.zeros(len(w), dtype=np.int64)
    exact = w / w.sum() * total
    counts = np.floor(exact).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _deficits(y):
    classes, counts = np.unique(y, return_counts=True)
    target = counts.max()
    return classes, counts, target


def _interpolate(X, members, neigh, quotas, rng):
    """Draw ``quotas[i]`` synthetic points from member ``i`` and its neighbours."""
    total = int(quotas.sum())
    src_local = np.repeat(np.arange(len(members)), quotas)
    if neigh.shape[1] == 0:
        nb_local = src_local.copy()
        deltas = np.zeros(total)
    else:
        pick = rng.integers(0, neigh.shape[1], size=total)
        nb_local = neigh[src_local, pick]
        deltas = rng.random(total)
    src = members[src_local]
    nb = members[nb_local]
    synth = X[src] + deltas[:, None] * (X[nb] - X[src])
    return synth, src, nb, deltas


def _oversample(X, y, spec: AugmentSpec, adaptive: bool):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    rng = np.random.default_rng(spec.seed)
    classes, counts, target = _deficits(y)
    empty = np.empty(0, dtype=np.int64)
    if len(classes) < 2:
        warnings.warn("single-class input: nothing to balance", RtdpaWarning, stacklevel=3)
        return X.copy(), y.copy(), Provenance(y[:0], empty, empty, np.empty(0))
    full_index = NeighborIndex(X) if adaptive else None
    out_X, out_y = [X], [y]
    prov = {"labels": [], "sources": [], "neighbors": [], "deltas": []}
    for c, n_c in zip(classes, counts):
        need = int(target - n_c)
        if need == 0:
            continue
        members = np.flatnonzero(y == c)
        k = min(spec.k_neighbors, n_c - 1)
        if k >= 1:
            neigh = NeighborIndex(X[members]).kneighbors(X[members], k, exclude_self=True)
        else:
            neigh = np.empty((n_c, 0), dtype=np.int64)
        if adaptive:
            quotas = _adasyn_quotas(X, y, c, members, spec.k_neighbors, need, full_index)
        else:
            # uniform: spread the deficit over members as evenly as possible, then
            # pick which members get the extra unit at random
            base = np.full(n_c, need // n_c, dtype=np.int64)
            extra = rng.choice(n_c, size=need % n_c, replace=False)
            base[extra] += 1
            quotas = base
        synth, src, nb, deltas = _interpolate(X, members, neigh, quotas, rng)
        out_X.append(synth)
        out_y.append(np.full(len(synth), c, dtype=y.dtype))
        prov["labels"].append(np.full(len(synth), c, dtype=y.dtype))
        prov["sources"].append(src)
        prov["neighbors"].append(nb)
        prov["deltas"].append(deltas)
    cat = {k: (np.concatenate(v) if v else np.empty(0)) for k, v in prov.items()}
    provenance = Provenance(cat["labels"], cat["sources"].astype(np.int64),
                            cat["neighbors"].astype(np.int64), cat["deltas"])
    return np.vstack(out_X), np.concatenate(out_y), provenance


def _adasyn_quotas(X, y, c, members, k_neighbors, need, index: NeighborIndex):
    k = min(k_neighbors, len(X) - 1)
    neigh = index.kneighbors(X[members], k + 1)
    ratios = np.empty(len(members))
    for i, m in enumerate(members):
        if m in neigh[i]:
            row = neigh[i][neigh[i] != m]
        else:
            # more than k exact duplicates precede the point itself
            row = index.query(X[m], k, exclude=m)
        ratios[i] = np.mean(y[row[:k]] != c)
    if ratios.sum() == 0:
        warnings.warn(f"ADASYN: every member of class {c} is surrounded by its own class; "
                      "using uniform quotas", RtdpaWarning, stacklevel=4)
        ratios = np.ones(len(members))
    return largest_remainder(ratios, need)


def smote(X, y, spec: AugmentSpec, return_provenance: bool = False):
    """Oversample every non-majority class to the majority count.

    A class with a single member is duplicated (its only neighbour is itself).
    """
    X2, y2, prov = _oversample(X, y, spec, adaptive=False)
    return (X2, y2, prov) if return_provenance else (X2, y2)


def adasyn(X, y, spec: AugmentSpec, return_provenance: bool = False):
    """SMOTE with per-point quotas proportional to the share of other-class neighbours."""
    X2, y2, prov = _oversample(X, y, spec, adaptive=True)
    return (X2, y2, prov) if return_provenance else (X2, y2)


def tomek_links(X, y, index: NeighborIndex | None = None) -> list[tuple[int, int]]:
    """Pairs ``(i, j)``, ``i < j``, of mutual nearest neighbours with different labels."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) < 2:
        return []
    index = index or NeighborIndex(X)
    nn = index.kneighbors(X, 1, exclude_self=True)[:, 0]
    links = []
    for i, j in enumerate(nn):
        if i < j and nn[j] == i and y[i] != y[j]:
            links.append((i, int(j)))
    return links


def _guarded_removal(y, remove: np.ndarray) -> np.ndarray:
    keep = ~remove
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if not keep[members].any():
            warnings.warn(f"cleaning would remove every member of class {c}; keeping one",
                          RtdpaWarning, stacklevel=3)
            keep[members[-1]] = True
    return keep


def smote_tomek(X, y, spec: AugmentSpec):
    X2, y2 = smote(X, y, spec)
    remove = np.zeros(len(y2), dtype=bool)
    for i, j in tomek_links(X2, y2):
        remove[i] = remove[j] = True
    keep = _guarded_removal(y2, remove)
    return X2[keep], y2[keep]


def enn_mask(X, y, k: int) -> np.ndarray:
    """True where a point's ``k``-NN vote does not include its own label among the modes."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) < 2:
        return np.zeros(len(X), dtype=bool)
    neigh = NeighborIndex(X).kneighbors(X, k, exclude_self=True)
    labels = y[neigh]
    remove = np.zeros(len(y), dtype=bool)
    for i in range(len(y)):
        vals, cnt = np.unique(labels[i], return_counts=True)
        own = cnt[vals == y[i]]
        remove[i] = (own[0] if len(own) else 0) < cnt.max()
    return remove


def smote_enn(X, y, spec: AugmentSpec):
    X2, y2 = smote(X, y, spec)
    keep = _guarded_removal(y2, enn_mask(X2, y2, spec.enn_k))
    return X2[keep], y2[keep]


def augment(X, y, spec: AugmentSpec):
    if spec.variant == "none":
        return np.asarray(X, dtype=float), np.asarray(y)
    fn = {"smote": smote, "adasyn": adasyn, "smote_tomek": smote_tomek, "smote_enn": smote_enn}[spec.variant]
    return fn(X, y, spec)
