"""Classifier families behind a shared fit / predict_proba / predict contract."""

from __future__ import annotations

from rtdpa.errors import ConfigError
from rtdpa.learners.base import Classifier
from rtdpa.learners.bayes import GaussianNB
from rtdpa.learners.boosting import AdaBoost, GradientBoosting
from rtdpa.learners.forest import ExtraTrees, RandomForest
from rtdpa.learners.knn import KNN
from rtdpa.learners.linear import SoftmaxRegression
from rtdpa.learners.mlp import MLP
from rtdpa.learners.svm import KernelSVM
from rtdpa.learners.tree import DecisionTree

FAMILIES: dict[str, type[Classifier]] = {
    cls.family: cls
    for cls in (SoftmaxRegression, GaussianNB, KernelSVM, MLP, KNN, DecisionTree,
                RandomForest, ExtraTrees, AdaBoost, GradientBoosting)
}

# Named boosting presets: the same trainer with a different growth policy.
PRESETS: dict[str, tuple[str, dict]] = {
    "lightgbm": ("gradient_boosting", {"growth": "leaf_wise", "max_leaves": 31, "max_depth": None}),
    "xgboost": ("gradient_boosting", {"growth": "level_wise", "max_depth": 6}),
}

SEEDED = {"mlp", "decision_tree", "random_forest", "extra_trees"}


def resolve_family(name: str, params: dict | None = None) -> tuple[str, dict]:
    params = dict(params or {})
    if name in PRESETS:
        family, base = PRESETS[name]
        return family, {**base, **params}
    if name not in FAMILIES:
        known = sorted(FAMILIES) + sorted(PRESETS)
        raise ConfigError(f"unknown model family {name!r}; known families: {', '.join(known)}")
    return name, params


def make_classifier(name: str, params: dict | None = None, seed: int | None = None) -> Classifier:
    family, params = resolve_family(name, params)
    if seed is not None and family in SEEDED and "seed" not in params:
        params["seed"] = seed
    try:
        return FAMILIES[family](**params)
    except TypeError as exc:
        raise ConfigError(f"bad hyperparameters for {family}: {exc}") from None


def classifier_from_dict(obj: dict) -> Classifier:
    family = obj.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r} in model payload")
    return FAMILIES[family].from_dict(obj)


__all__ = ["FAMILIES", "PRESETS", "Classifier", "make_classifier", "classifier_from_dict", "resolve_family"]
