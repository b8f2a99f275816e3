"""Per-row-type pipeline orchestration.

Every row type gets its own label policy outcome, split, preprocessor, PCA
projection, rebalancing and classifier. The resulting :class:`RtdpaModel`
routes each incoming row to the entry for its type.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import itertools
import json
import logging
import struct
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from rtdpa.augmentation import AugmentSpec, augment
from rtdpa.dataset import (
    Dataset,
    LabelPolicy,
    Schema,
    SplitSpec,
    TypedPartition,
    label_code_map,
    partition_indices,
    split_indices,
)
from rtdpa.decomposition import PcaModel, fit_pca, project, select_components
from rtdpa.errors import ConfigError, DataError, ModelFileError, RoutingError, RtdpaError, RtdpaWarning, TrainingError
from rtdpa.learners import Classifier, classifier_from_dict, make_classifier, resolve_family
from rtdpa.metrics import MetricsReport, build_report, confusion_matrix, accuracy, evaluate
from rtdpa.preprocess import FittedPreprocessor, PreprocessPlan, fit_preprocessor, transform

log = logging.getLogger("rtdpa")

MAGIC = b"RTDPA"
SCHEMA_VERSION = 1
_HEADER = struct.Struct(">5sH32sQ")

DISPLAY_NAMES = {
    "logistic_regression": "SoftmaxRegression",
    "gaussian_nb": "GaussianNB",
    "svm": "KernelSVM",
    "mlp": "MLP",
    "knn": "KNN",
    "decision_tree": "DecisionTree",
    "random_forest": "RandomForest",
    "extra_trees": "ExtraTrees",
    "adaboost": "AdaBoost",
    "gradient_boosting": "GradientBoosting",
}


# ---------------------------------------------------------------- config


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PreprocessSection(_Section):
    drop_missing_threshold_pct: float = 70.0
    drop_columns: list[str] = []
    numeric_imputation: Literal["median", "mean"] = "median"
    categorical_imputation: Literal["mode"] = "mode"
    max_cardinality: int = 64
    standardize: bool = True
    winsorize: Optional[tuple[float, float]] = None

    def plan(self) -> PreprocessPlan:
        return PreprocessPlan(self.drop_missing_threshold_pct, tuple(self.drop_columns), self.numeric_imputation,
                              self.categorical_imputation, self.max_cardinality, self.standardize,
                              tuple(self.winsorize) if self.winsorize else None)


class PcaSection(_Section):
    enabled: bool = True
    cumulative_threshold: Optional[float] = 0.95
    fixed_count: Optional[int] = None


class AugmentSection(_Section):
    variant: Literal["none", "smote", "adasyn", "smote_tomek", "smote_enn"] = "smote"
    k_neighbors: int = Field(5, ge=1)
    enn_k: int = Field(3, ge=1)


class ModelSection(_Section):
    family: str = "decision_tree"
    params: dict[str, Any] = {}
    label: Optional[str] = None

    @field_validator("family")
    @classmethod
    def _known(cls, v):
        try:
            resolve_family(v)
        except ConfigError as exc:
            raise ValueError(str(exc)) from None
        return v


class TuningSection(_Section):
    grid: dict[str, list[Any]]
    cv_folds: int = Field(5, ge=2)
    metric: Literal["f1", "precision", "recall", "accuracy", "roc_auc", "cohens_kappa"] = "f1"

    @field_validator("grid")
    @classmethod
    def _nonempty(cls, v):
        if not v or any(len(vals) == 0 for vals in v.values()):
            raise ValueError("tuning grid must be nonempty with at least one value per axis")
        return v


class RowTypeSection(_Section):
    preprocess: Optional[PreprocessSection] = None
    pca: Optional[PcaSection] = None
    augment: Optional[AugmentSection] = None
    model: Optional[ModelSection] = None
    tuning: Optional[TuningSection] = None


class SplitSection(_Section):
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    stratified: bool = True


class LabelPolicySection(_Section):
    merges: list[tuple[int, int]] = []
    min_class_count: Optional[int] = 5


class PipelineConfig(_Section):
    seed: int = Field(0, ge=0)
    split: SplitSection = SplitSection()
    label_policy: LabelPolicySection = LabelPolicySection()
    row_types: dict[str, RowTypeSection] = {"default": RowTypeSection()}

    def label_policy_obj(self) -> LabelPolicy:
        try:
            return LabelPolicy(tuple(tuple(m) for m in self.label_policy.merges), self.label_policy.min_class_count)
        except RtdpaError as exc:
            raise ConfigError(str(exc)) from None

    def resolve(self, row_type: str) -> "ResolvedSection":
        """Effective settings for ``row_type``: explicit fields over the default section."""
        default = self.row_types.get("default")
        own = self.row_types.get(row_type)
        if own is None and default is None:
            raise ConfigError(f"no configuration for row type {row_type!r} and no 'default' section")
        base = default.model_dump(exclude_unset=True) if default else {}
        over = own.model_dump(exclude_unset=True) if own else {}
        merged = {}
        for key in ("preprocess", "pca", "augment", "model", "tuning"):
            b, o = base.get(key), over.get(key)
            if key == "model" and o and b and o.get("family", b.get("family")) != b.get("family"):
                b = {}      # a different family does not inherit hyperparameters
            if key == "tuning":
                merged[key] = o if o is not None else b
            elif b is None and o is None:
                merged[key] = {}
            else:
                merged[key] = {**(b or {}), **(o or {})}
        return ResolvedSection(
            PreprocessSection(**merged["preprocess"]),
            PcaSection(**merged["pca"]),
            AugmentSection(**merged["augment"]),
            ModelSection(**merged["model"]),
            TuningSection(**merged["tuning"]) if merged["tuning"] else None,
        )

    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()


@dataclass(frozen=True)
class ResolvedSection:
    preprocess: PreprocessSection
    pca: PcaSection
    augment: AugmentSection
    model: ModelSection
    tuning: TuningSection | None


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        parts.append(f"{loc}: {err['msg']}" if loc else err["msg"])
    return "; ".join(parts)


def parse_config(obj) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(obj)
    except ValidationError as exc:
        raise ConfigError(f"invalid pipeline config: {_validation_message(exc)}") from None


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(obj)


def type_seed(master: int, row_type: str) -> int:
    """Per-type seed independent of training order."""
    digest = hashlib.sha256(f"{master}:{row_type}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def index_fingerprint(indices) -> str:
    return hashlib.sha256(np.asarray(indices, dtype=np.int64).tobytes()).hexdigest()


# ---------------------------------------------------------------- model


@dataclass
class TypeEntry:
    """Everything needed to score rows of one type."""

    row_type: str
    preprocessor: FittedPreprocessor
    pca: PcaModel | None
    model: Classifier
    class_codes: tuple[int, ...]          # contiguous code k -> reported code class_codes[k-1]
    code_map: dict[int, int]              # original target code -> reported code
    label: str
    fingerprints: dict = field(default_factory=dict)
    test_rows: tuple[int, ...] = ()
    report: MetricsReport | None = None

    def features(self, d: Dataset) -> np.ndarray:
        X = transform(self.preprocessor, d)
        return project(self.pca, X) if self.pca is not None else X

    def scores(self, Z: np.ndarray) -> np.ndarray:
        """Class scores with one column per reported class code."""
        P = self.model.predict_proba(Z)
        out = np.zeros((len(Z), len(self.class_codes)))
        out[:, np.asarray(self.model.classes_, dtype=np.int64) - 1] = P
        return out

    def to_dict(self) -> dict:
        return {
            "row_type": self.row_type,
            "preprocessor": self.preprocessor.to_dict(),
            "pca": self.pca.to_dict() if self.pca is not None else None,
            "model": self.model.to_dict(),
            "class_codes": list(self.class_codes),
            "code_map": [[k, v] for k, v in sorted(self.code_map.items())],
            "label": self.label,
            "fingerprints": self.fingerprints,
            "test_rows": list(self.test_rows),
            "report": self.report.to_dict() if self.report is not None else None,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TypeEntry":
        return cls(
            row_type=obj["row_type"],
            preprocessor=FittedPreprocessor.from_dict(obj["preprocessor"]),
            pca=PcaModel.from_dict(obj["pca"]) if obj["pca"] is not None else None,
            model=classifier_from_dict(obj["model"]),
            class_codes=tuple(obj["class_codes"]),
            code_map={int(k): int(v) for k, v in obj["code_map"]},
            label=obj["label"],
            fingerprints=obj["fingerprints"],
            test_rows=tuple(obj["test_rows"]),
            report=MetricsReport.from_dict(obj["report"]) if obj["report"] is not None else None,
        )


@dataclass
class RtdpaModel:
    schema: Schema
    entries: dict[str, TypeEntry]
    config_fingerprint: str
    created: str
    failures: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise TrainingError("model registry is empty")

    @property
    def row_types(self) -> list[str]:
        return list(self.entries)

    @property
    def class_codes(self) -> list[int]:
        return sorted({c for e in self.entries.values() for c in e.class_codes})

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "entries": [e.to_dict() for e in self.entries.values()],
            "config_fingerprint": self.config_fingerprint,
            "created": self.created,
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RtdpaModel":
        entries = [TypeEntry.from_dict(e) for e in obj["entries"]]
        return cls(Schema.from_dict(obj["schema"]), {e.row_type: e for e in entries},
                   obj["config_fingerprint"], obj["created"], dict(obj["failures"]))

    def fingerprint(self) -> str:
        """Hash of the registry content, excluding creation time and measured fit times."""
        payload = self.to_dict()
        payload.pop("created")
        for e in payload["entries"]:
            if e["report"] is not None:
                e["report"]["running_time_seconds"] = None
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def replace_entry(self, entry: TypeEntry) -> "RtdpaModel":
        entries = dict(self.entries)
        entries[entry.row_type] = entry
        return RtdpaModel(self.schema, entries, self.config_fingerprint, self.created, dict(self.failures))


# ---------------------------------------------------------------- training


@dataclass
class TypeData:
    """One row type's rows, labels after the label policy, and its split."""

    row_type: str
    rows: np.ndarray            # indices into the full dataset
    data: Dataset
    y: np.ndarray               # contiguous codes 1..K
    class_codes: tuple[int, ...]
    code_map: dict[int, int]
    train: np.ndarray           # indices into ``rows``
    test: np.ndarray


def prepare_type(d: Dataset, row_type: str, rows: np.ndarray, config: PipelineConfig) -> TypeData:
    sub = d.take(rows)
    original = sub.targets
    code_map = label_code_map(original, config.label_policy_obj())
    survivors = sorted(set(code_map.values()) & {code_map[int(c)] for c in original})
    pos = {c: i + 1 for i, c in enumerate(survivors)}
    y = np.array([pos[code_map[int(c)]] for c in original], dtype=np.int64)
    split = SplitSpec(config.split.test_fraction, type_seed(config.seed, row_type), config.split.stratified)
    train, test = split_indices(y, split)
    return TypeData(row_type, rows, sub, y, tuple(survivors), code_map, train, test)


def _pca_for(section: PcaSection, X: np.ndarray, override: int | None = None) -> PcaModel | None:
    if override is not None:
        p = fit_pca(X)
        return select_components(p, fixed_count=min(int(override), p.n_input))
    if not section.enabled:
        return None
    p = fit_pca(X)
    if section.fixed_count is not None:
        return select_components(p, fixed_count=min(section.fixed_count, p.n_input))
    return select_components(p, cumulative_threshold=section.cumulative_threshold)


def _fit_model(family, params, Z, y, aug: AugmentSection, seed: int):
    Za, ya = augment(Z, y, AugmentSpec(aug.variant, aug.k_neighbors, aug.enn_k, seed))
    model = make_classifier(family, params, seed=seed)
    start = time.perf_counter()
    model.fit(Za, ya)
    return model, time.perf_counter() - start, len(ya)


def train_type(td: TypeData, config: PipelineConfig) -> TypeEntry:
    sec = config.resolve(td.row_type)
    seed = type_seed(config.seed, td.row_type)
    train_data = td.data.take(td.train)
    fp = fit_preprocessor(train_data, sec.preprocess.plan(), td.row_type)
    X_train = transform(fp, train_data)
    X_test = transform(fp, td.data.take(td.test))
    y_train, y_test = td.y[td.train], td.y[td.test]

    family, params = resolve_family(sec.model.family, sec.model.params)
    pca_override = None
    tuning_table = None
    if sec.tuning is not None:
        part = TypedPartition(td.row_type, X_train, y_train, fp.feature_names, td.class_codes)
        result = grid_search(part, family, sec.tuning, seed, base_params=params, pca=sec.pca, augment=sec.augment)
        best = dict(result.best)
        pca_override = best.pop("pca_components", None)
        params = {**params, **best}
        tuning_table = result.table

    pca = _pca_for(sec.pca, X_train, pca_override)
    Z_train = project(pca, X_train) if pca is not None else X_train
    Z_test = project(pca, X_test) if pca is not None else X_test
    model, seconds, n_augmented = _fit_model(family, params, Z_train, y_train, sec.augment, seed)

    label = sec.model.label or DISPLAY_NAMES[family]
    entry = TypeEntry(td.row_type, fp, pca, model, td.class_codes, td.code_map, label)
    train_scores = entry.scores(Z_train)
    test_scores = entry.scores(Z_test)
    codes = np.arange(1, len(td.class_codes) + 1)
    train_pred = codes[np.argmax(train_scores, axis=1)]
    test_pred = codes[np.argmax(test_scores, axis=1)]
    train_acc = accuracy(confusion_matrix(y_train, train_pred, codes))
    reported = np.asarray(td.class_codes)
    ev = evaluate(reported[y_test - 1], reported[test_pred - 1], test_scores, td.class_codes)
    report = build_report(label, td.row_type, train_acc, ev, seconds)
    diag = dict(report.diagnostics)
    diag.update({
        "n_train": int(len(td.train)), "n_test": int(len(td.test)), "n_train_augmented": int(n_augmented),
        "n_features": int(fp.n_features), "n_components": int(pca.n_kept) if pca is not None else None,
        "dropped": fp.dropped, "params": _jsonable(params),
    })
    if tuning_table is not None:
        diag["tuning"] = tuning_table
    report = MetricsReport(**{**report.to_dict(), "diagnostics": diag})
    entry.report = report
    train_fp = index_fingerprint(td.rows[td.train])
    # every fitted stage consumed exactly the training rows
    entry.fingerprints = {"preprocess": train_fp, "pca": train_fp, "augment": train_fp, "tuning": train_fp,
                          "model": train_fp, "test": index_fingerprint(td.rows[td.test])}
    entry.test_rows = tuple(int(i) for i in td.rows[td.test])
    return entry


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=lambda o: o.item() if hasattr(o, "item") else str(o)))


def train_all(d: Dataset, config: PipelineConfig, created: str | None = None):
    """Train one pipeline per row type; returns ``(model, reports)``.

    A failing row type is logged and recorded in ``model.failures``; if every
    type fails a :class:`TrainingError` is raised.
    """
    groups = partition_indices(d)
    for rt in groups:
        config.resolve(rt)       # fail fast on uncovered row types
    entries, reports, failures = {}, {}, {}
    for rt, rows in groups.items():
        try:
            td = prepare_type(d, rt, rows, config)
            entry = train_type(td, config)
        except RtdpaError as exc:
            log.error("row type %r failed: %s", rt, exc)
            failures[rt] = str(exc)
            continue
        entries[rt] = entry
        reports[rt] = entry.report
        log.info("row type %r trained: %s", rt, entry.label)
    if not entries:
        detail = "; ".join(f"{k}: {v}" for k, v in failures.items())
        raise TrainingError(f"no row type trained successfully ({detail})")
    created = created or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    model = RtdpaModel(d.schema, entries, config.fingerprint(), created, failures)
    return model, reports


# ---------------------------------------------------------------- routing


@dataclass
class RoutedPrediction:
    row_types: list
    labels: np.ndarray          # reported class codes; -1 for unrouted rows
    scores: np.ndarray          # n x len(class_codes); NaN for unrouted rows
    class_codes: list[int]
    status: list[str]           # "ok" or "unrouted"
    errors: list[str]


def route_predict(m: RtdpaModel, rows: Dataset, skip_unknown: bool = False) -> RoutedPrediction:
    """Score every row with the model registered for its row type; input order is kept."""
    n = rows.n_rows
    codes = m.class_codes
    col = {c: j for j, c in enumerate(codes)}
    labels = np.full(n, -1, dtype=np.int64)
    scores = np.full((n, len(codes)), np.nan)
    status = ["ok"] * n
    errors = [""] * n
    types = rows.row_types
    groups: dict[str, list[int]] = {}
    for i, t in enumerate(types):
        if t is None or t == "":
            if not skip_unknown:
                raise DataError(f"missing row type at row {i}")
            status[i], errors[i] = "unrouted", "missing row type"
            continue
        if t not in m.entries:
            if not skip_unknown:
                raise RoutingError(t, i)
            status[i], errors[i] = "unrouted", str(RoutingError(t, i))
            continue
        groups.setdefault(t, []).append(i)
    for t, idx in groups.items():
        entry = m.entries[t]
        idx = np.asarray(idx, dtype=np.int64)
        S = entry.scores(entry.features(rows.take(idx)))
        cols = [col[c] for c in entry.class_codes]
        scores[idx] = 0.0
        scores[np.ix_(idx, cols)] = S
        labels[idx] = np.asarray(entry.class_codes)[np.argmax(S, axis=1)]
    return RoutedPrediction(list(types), labels, scores, codes, status, errors)


def reported_targets(entry: TypeEntry, original) -> np.ndarray:
    """Map original target codes to the entry's reported codes."""
    out = []
    for c in np.asarray(original, dtype=np.int64):
        if int(c) not in entry.code_map:
            raise DataError(f"row type {entry.row_type!r}: unknown target code {int(c)}")
        out.append(entry.code_map[int(c)])
    return np.asarray(out, dtype=np.int64)


def evaluate_model(m: RtdpaModel, d: Dataset, with_timing: bool = True) -> dict[str, MetricsReport]:
    """Metrics of every registered type on labeled data ``d``.

    Train accuracy and running time are carried over from the training report.
    """
    if not d.has_targets:
        raise DataError("evaluation data has no target values")
    out = {}
    groups = partition_indices(d)
    for t, idx in groups.items():
        if t not in m.entries:
            log.warning("no model for row type %r; %d rows skipped", t, len(idx))
            continue
        entry = m.entries[t]
        sub = d.take(idx)
        y = reported_targets(entry, sub.targets)
        S = entry.scores(entry.features(sub))
        pred = np.asarray(entry.class_codes)[np.argmax(S, axis=1)]
        ev = evaluate(y, pred, S, entry.class_codes)
        base = entry.report
        out[t] = build_report(entry.label, t, base.train_accuracy if base else float("nan"), ev,
                              base.running_time_seconds if (base and with_timing) else None)
    if not out:
        raise DataError("no rows of a registered row type in the evaluation data")
    return out


# ---------------------------------------------------------------- tuning


@dataclass
class GridResult:
    best: dict
    table: list[dict]


def stratified_folds(y, k: int, seed: int) -> np.ndarray:
    """Fold id per row: each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        folds[members] = (np.arange(len(members)) + offset) % k
        offset = (offset + len(members)) % k
    return folds


def grid_points(grid: dict) -> list[dict]:
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def grid_search(p: TypedPartition, family: str, spec: TuningSection, seed: int, base_params: dict | None = None,
                pca: PcaSection | None = None, augment: AugmentSection | None = None) -> GridResult:
    """Stratified k-fold search; ties go to fewer set parameters, then grid order."""
    family, base_params = resolve_family(family, base_params)
    pca = pca or PcaSection(enabled=False)
    aug = augment or AugmentSection(variant="none")
    folds = stratified_folds(p.y, spec.cv_folds, seed)
    counts = np.bincount(p.y)
    if (counts[counts > 0] < spec.cv_folds).any():
        warnings.warn("some classes have fewer members than folds; metrics use scorable classes only",
                      RtdpaWarning, stacklevel=2)
    table = []
    for order, point in enumerate(grid_points(spec.grid)):
        params = dict(point)
        n_comp = params.pop("pca_components", None)
        fold_scores = []
        for f in range(spec.cv_folds):
            tr, va = np.flatnonzero(folds != f), np.flatnonzero(folds == f)
            if len(va) == 0 or len(np.unique(p.y[tr])) < 2:
                continue
            pm = _pca_for(pca, p.X[tr], n_comp)
            Ztr = project(pm, p.X[tr]) if pm is not None else p.X[tr]
            Zva = project(pm, p.X[va]) if pm is not None else p.X[va]
            try:
                model, _, _ = _fit_model(family, {**base_params, **params}, Ztr, p.y[tr], aug, seed)
            except TypeError as exc:
                raise ConfigError(f"bad tuning parameter for {family}: {exc}") from None
            P = model.predict_proba(Zva)
            pred = model.classes_[np.argmax(P, axis=1)]
            ev = evaluate(p.y[va], pred, P, model.classes_)
            fold_scores.append(getattr(ev, spec.metric))
        mean = float(np.nanmean(fold_scores)) if fold_scores else float("nan")
        table.append({"order": order, "params": _jsonable(point), "mean_score": mean,
                      "fold_scores": [float(s) for s in fold_scores]})
    scored = [r for r in table if not np.isnan(r["mean_score"])]
    if not scored:
        raise TrainingError("grid search produced no scorable fold")
    best = min(scored, key=lambda r: (-r["mean_score"],
                                      sum(v is not None for v in r["params"].values()), r["order"]))
    return GridResult(dict(grid_points(spec.grid)[best["order"]]), table)


# ---------------------------------------------------------------- persistence


def dumps(m: RtdpaModel) -> bytes:
    payload = json.dumps(m.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(MAGIC, SCHEMA_VERSION, hashlib.sha256(payload).digest(), len(payload)) + payload


def loads(blob: bytes) -> RtdpaModel:
    if len(blob) < _HEADER.size:
        raise ModelFileError("model file is truncated (incomplete header)")
    magic, version, digest, length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFileError("not an RTDPA model file (bad magic bytes)")
    if version != SCHEMA_VERSION:
        raise ModelFileError(f"model file schema_version {version} is not supported (expected {SCHEMA_VERSION})")
    payload = blob[_HEADER.size:]
    if len(payload) != length:
        raise ModelFileError(f"model file is truncated: payload has {len(payload)} of {length} bytes")
    if hashlib.sha256(payload).digest() != digest:
        raise ModelFileError("model file checksum mismatch (corrupted content)")
    try:
        return RtdpaModel.from_dict(json.loads(payload.decode("utf-8")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"model payload is malformed: {exc}") from None


def save(m: RtdpaModel, path) -> None:
    Path(path).write_bytes(dumps(m))


def load(path) -> RtdpaModel:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError:
        raise ModelFileError(f"model file not found: {path}") from None
    return loads(blob)


# ---------------------------------------------------------------- monitoring

MONITORED = ("test_accuracy", "precision", "recall", "f1", "roc_auc", "cohens_kappa")


@dataclass(frozen=True)
class MonitorBaseline:
    reports: dict[str, MetricsReport]
    thresholds: dict[str, float] = field(default_factory=lambda: {k: 0.05 for k in MONITORED})

    def __post_init__(self):
        bad = {k: v for k, v in self.thresholds.items() if v < 0 or k not in MONITORED}
        if bad:
            raise ConfigError(f"thresholds must be non-negative and name monitored metrics: {bad}")

    @classmethod
    def from_model(cls, m: RtdpaModel, threshold: float = 0.05) -> "MonitorBaseline":
        return cls({t: e.report for t, e in m.entries.items() if e.report is not None},
                   {k: threshold for k in MONITORED})


@dataclass
class TypeDrift:
    row_type: str
    status: str                     # "ok", "degraded" or "no data"
    n_rows: int
    metrics: dict
    flags: list


def monitor(m: RtdpaModel, baseline: MonitorBaseline, fresh: Dataset) -> dict[str, TypeDrift]:
    """Compare fresh labeled data against the baseline; flags only, never retrains."""
    groups = partition_indices(fresh) if fresh.n_rows else {}
    out = {}
    for t, entry in m.entries.items():
        idx = groups.get(t)
        if idx is None or len(idx) == 0:
            out[t] = TypeDrift(t, "no data", 0, {}, [])
            continue
        sub = fresh.take(idx)
        y = reported_targets(entry, sub.targets)
        S = entry.scores(entry.features(sub))
        pred = np.asarray(entry.class_codes)[np.argmax(S, axis=1)]
        ev = evaluate(y, pred, S, entry.class_codes)
        metrics = {"test_accuracy": ev.accuracy, "precision": ev.precision, "recall": ev.recall,
                   "f1": ev.f1, "roc_auc": ev.roc_auc, "cohens_kappa": ev.cohens_kappa}
        flags = []
        base = baseline.reports.get(t)
        if base is not None:
            for key, thr in baseline.thresholds.items():
                ref, now = getattr(base, key), metrics[key]
                if np.isnan(ref) or np.isnan(now):
                    continue
                if now < ref - thr:
                    flags.append(key)
        out[t] = TypeDrift(t, "degraded" if flags else "ok", len(idx), metrics, flags)
    return out
