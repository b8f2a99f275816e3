"""Desk-scale benchmark on the synthetic row-typed data.

``compare_pooled`` trains per-type pipelines and a single pooled pipeline
on the same rows and scores both on the same per-type test rows. The pooled
model never sees the row type; its predictions pass through each type's
label map before scoring, so both models are judged on identical targets.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from rtdpa import framework as fw
from rtdpa.dataset import Dataset, label_code_map, partition_indices
from rtdpa.decomposition import project
from rtdpa.metrics import confusion_matrix, precision_recall_f1
from rtdpa.preprocess import fit_preprocessor, transform

# Per-family settings used on the synthetic benchmark. Trees split on raw
# axes, so PCA is off for them. Oversampling trades minority precision for
# recall, so the distance- and gradient-based families train on the raw split.
_NO_PCA = {"enabled": False}
_NO_AUG = {"variant": "none"}
BENCHMARK_FAMILIES: dict[str, dict] = {
    "logistic_regression": {"augment": _NO_AUG, "model": {"family": "logistic_regression", "params": {"lr": 0.5, "epochs": 300}}},
    "gaussian_nb": {"model": {"family": "gaussian_nb"}},
    "knn": {"augment": _NO_AUG, "model": {"family": "knn", "params": {"k": 5}}},
    "decision_tree": {"pca": _NO_PCA, "model": {"family": "decision_tree", "params": {"max_depth": 8}}},
    "random_forest": {"pca": _NO_PCA, "model": {"family": "random_forest",
                                                 "params": {"n_trees": 25, "max_depth": 10}}},
    "extra_trees": {"pca": _NO_PCA, "model": {"family": "extra_trees", "params": {"n_trees": 25, "max_depth": 10}}},
    "adaboost": {"pca": _NO_PCA, "model": {"family": "adaboost", "params": {"n_rounds": 50, "stump_depth": 3}}},
    "gradient_boosting": {"pca": _NO_PCA, "model": {"family": "gradient_boosting",
                                                     "params": {"n_rounds": 30, "learning_rate": 0.2,
                                                                "max_depth": 3}}},
    "svm": {"augment": _NO_AUG, "model": {"family": "svm", "params": {"kernel": "rbf", "C": 10.0}}},
    "mlp": {"augment": _NO_AUG, "model": {"family": "mlp", "params": {"hidden_units": 16, "lr": 0.5, "epochs": 300}}},
}


def benchmark_config(family: str, seed: int = 0) -> fw.PipelineConfig:
    """Pipeline config for one family on the synthetic benchmark."""
    default = dict(BENCHMARK_FAMILIES[family])
    return fw.parse_config({
        "seed": seed,
        "label_policy": {"merges": [[4, 3]], "min_class_count": 5},
        "row_types": {
            "default": default,
            "personal": {"preprocess": {"drop_columns": ["DRYLAND", "WETLAND"]}},
        },
    })


def _macro(y_true, y_pred, kind="f1") -> float:
    classes = sorted(set(np.asarray(y_true).tolist()) | set(np.asarray(y_pred).tolist()))
    prf = precision_recall_f1(confusion_matrix(y_true, y_pred, classes))
    return getattr(prf, kind)


@dataclass
class Comparison:
    per_type_f1: dict[str, float]
    pooled_f1: dict[str, float]

    @property
    def mean_per_type(self) -> float:
        return float(np.mean(list(self.per_type_f1.values())))

    @property
    def mean_pooled(self) -> float:
        return float(np.mean(list(self.pooled_f1.values())))


def compare_pooled(d: Dataset, config: fw.PipelineConfig) -> Comparison:
    groups = partition_indices(d)
    typed = {rt: fw.prepare_type(d, rt, rows, config) for rt, rows in groups.items()}
    per_type = {rt: fw.train_type(td, config).report.f1 for rt, td in typed.items()}

    # pooled: one pipeline over the union of every type's training rows, using
    # only columns that apply to every type (a type-specific column would
    # otherwise reveal the row type through its missingness)
    train_rows = np.sort(np.concatenate([td.rows[td.train] for td in typed.values()]))
    sec = config.resolve("default")
    shared_drop = sorted({c for rt in typed for c in config.resolve(rt).preprocess.drop_columns})
    pooled_data = d.take(train_rows)
    fp = fit_preprocessor(pooled_data, fw.PreprocessSection(**{**sec.preprocess.model_dump(),
                                                               "drop_columns": shared_drop}).plan())
    X = transform(fp, pooled_data)
    pca = fw._pca_for(sec.pca, X)
    Z = project(pca, X) if pca is not None else X
    y = pooled_data.targets
    family, params = fw.resolve_family(sec.model.family, sec.model.params)
    model, _, _ = fw._fit_model(family, params, Z, y, sec.augment, config.seed)

    pooled = {}
    for rt, td in typed.items():
        test = d.take(td.rows[td.test])
        Xt = transform(fp, test)
        pred = model.predict(project(pca, Xt) if pca is not None else Xt)
        cmap = label_code_map(test.targets, config.label_policy_obj(), universe=sorted(td.code_map))
        cmap = td.code_map | {c: cmap.get(c, c) for c in set(pred.tolist()) - set(td.code_map)}
        truth = np.array([td.code_map[int(c)] for c in test.targets])
        mapped = np.array([cmap[int(c)] for c in pred])
        pooled[rt] = _macro(truth, mapped)
    return Comparison(per_type, pooled)


@dataclass
class FamilyResult:
    family: str
    precision: dict[str, float]
    f1: dict[str, float]
    seconds: float


def run_families(d: Dataset, families=None, seed: int = 0) -> list[FamilyResult]:
    out = []
    for family in families or BENCHMARK_FAMILIES:
        start = time.perf_counter()
        _, reports = fw.train_all(d, benchmark_config(family, seed))
        out.append(FamilyResult(family, {k: r.precision for k, r in reports.items()},
                                {k: r.f1 for k, r in reports.items()}, time.perf_counter() - start))
    return out
