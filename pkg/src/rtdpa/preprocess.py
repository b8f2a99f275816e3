"""Per-row-type data preparation.

Missing-value reporting and thresholded column drops, removal of columns
that do not apply to a row type, imputation, one-hot encoding, optional
winsorization and z-scoring.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from rtdpa.dataset import Dataset, Schema
from rtdpa.errors import DataError, SchemaError


@dataclass(frozen=True)
class MissingEntry:
    column: str
    total_missing: int
    pct_missing: float


@dataclass(frozen=True)
class MissingReport:
    n_rows: int
    entries: tuple[MissingEntry, ...]

    def __getitem__(self, column: str) -> MissingEntry:
        for e in self.entries:
            if e.column == column:
                return e
        raise KeyError(column)

    def sorted(self) -> list[MissingEntry]:
        """Entries by descending missing share; ties keep column order."""
        return sorted(self.entries, key=lambda e: -e.pct_missing)

    def render(self, only_missing: bool = True) -> str:
        rows = [e for e in self.sorted() if e.total_missing > 0 or not only_missing]
        width = max([len("Variable")] + [len(e.column) for e in rows])
        lines = [f"{'Variable':<{width}}  {'Total Missing':>13}  {'% Missing':>9}"]
        for e in rows:
            lines.append(f"{e.column:<{width}}  {e.total_missing:>13d}  {e.pct_missing:>9.1f}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({
            "n_rows": self.n_rows,
            "columns": [{"column": e.column, "total_missing": e.total_missing,
                         "pct_missing": e.pct_missing} for e in self.sorted()],
        })


def missing_value_report(d: Dataset, columns=None) -> MissingReport:
    """Exact per-column missing counts; by default over the feature columns."""
    names = [c.name for c in d.schema.features] if columns is None else list(columns)
    n = d.n_rows
    entries = []
    for name in names:
        total = int(d.is_missing(name).sum())
        entries.append(MissingEntry(name, total, 100.0 * total / n if n else 0.0))
    return MissingReport(n, tuple(entries))


@dataclass(frozen=True)
class PreprocessPlan:
    drop_missing_threshold_pct: float = 70.0
    drop_columns: tuple[str, ...] = ()
    numeric_imputation: str = "median"
    categorical_imputation: str = "mode"
    max_cardinality: int = 64
    standardize: bool = True
    winsorize: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0.0 < self.drop_missing_threshold_pct <= 100.0:
            raise SchemaError("drop_missing_threshold_pct must lie in (0, 100]")
        if self.max_cardinality < 2:
            raise SchemaError("max_cardinality must be at least 2")
        if self.numeric_imputation not in ("median", "mean"):
            raise SchemaError(f"unknown numeric imputation {self.numeric_imputation!r}")
        if self.categorical_imputation != "mode":
            raise SchemaError(f"unknown categorical imputation {self.categorical_imputation!r}")
        if self.winsorize is not None:
            lo, hi = self.winsorize
            if not 0.0 <= lo < hi <= 1.0:
                raise SchemaError("winsorize quantiles must satisfy 0 <= low < high <= 1")


def drop_high_missing(d: Dataset, plan: PreprocessPlan) -> tuple[Dataset, list[str]]:
    """Drop feature columns whose missing share strictly exceeds the threshold."""
    report = missing_value_report(d)
    dropped = [e.column for e in report.entries if e.pct_missing > plan.drop_missing_threshold_pct]
    if dropped and len(dropped) == len(d.schema.features):
        raise DataError(f"every feature column exceeds {plan.drop_missing_threshold_pct}% missing")
    return d.drop(dropped), dropped


def drop_inapplicable(d: Dataset, row_type: str, drop_columns) -> Dataset:
    """Remove columns that do not apply to ``row_type``."""
    drop_columns = list(drop_columns)
    unknown = [c for c in drop_columns if c not in d.schema.names]
    if unknown:
        raise SchemaError(f"row type {row_type!r}: cannot drop unknown column(s) {unknown}")
    return d.drop(drop_columns)


@dataclass(frozen=True)
class FittedPreprocessor:
    input_columns: tuple[str, ...]
    kinds: tuple[str, ...]
    fill_values: tuple
    vocabularies: dict
    clip_bounds: dict
    keep_mask: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    feature_names: tuple[str, ...]
    dropped: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> dict:
        return {
            "input_columns": list(self.input_columns),
            "kinds": list(self.kinds),
            "fill_values": list(self.fill_values),
            "vocabularies": {k: list(v) for k, v in self.vocabularies.items()},
            "clip_bounds": {k: list(v) for k, v in self.clip_bounds.items()},
            "keep_mask": self.keep_mask.astype(int).tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "feature_names": list(self.feature_names),
            "dropped": self.dropped,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FittedPreprocessor":
        return cls(
            input_columns=tuple(obj["input_columns"]),
            kinds=tuple(obj["kinds"]),
            fill_values=tuple(obj["fill_values"]),
            vocabularies={k: tuple(v) for k, v in obj["vocabularies"].items()},
            clip_bounds={k: tuple(v) for k, v in obj["clip_bounds"].items()},
            keep_mask=np.asarray(obj["keep_mask"], dtype=bool),
            means=np.asarray(obj["means"], dtype=float),
            stds=np.asarray(obj["stds"], dtype=float),
            feature_names=tuple(obj["feature_names"]),
            dropped={k: list(v) for k, v in obj["dropped"].items()},
            notes=tuple(obj["notes"]),
        )


def _mode(values) -> str:
    counts = Counter(v for v in values if v is not None)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _encode(d: Dataset, columns, kinds, fill_values, vocabularies, clip_bounds) -> tuple[np.ndarray, list[str]]:
    blocks, names = [], []
    n = d.n_rows
    for name, kind, fill in zip(columns, kinds, fill_values):
        col = d.columns[name]
        if kind in ("numeric", "date"):
            x = np.where(np.isnan(col), fill, col).astype(float)
            if name in clip_bounds:
                lo, hi = clip_bounds[name]
                x = np.clip(x, lo, hi)
            blocks.append(x[:, None])
            names.append(name)
        else:
            vocab = vocabularies[name]
            index = {v: i for i, v in enumerate(vocab)}
            block = np.zeros((n, len(vocab)))
            for i, v in enumerate(col):
                j = index.get(fill if v is None else v)
                if j is not None:
                    block[i, j] = 1.0
            blocks.append(block)
            names.extend(f"{name}={v}" for v in vocab)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return X, names


def fit_preprocessor(d: Dataset, plan: PreprocessPlan, row_type: str | None = None) -> FittedPreprocessor:
    """Learn drops, imputation values, vocabularies and scaling from ``d``."""
    dropped: dict[str, list[str]] = {}
    if plan.drop_columns:
        d = drop_inapplicable(d, row_type or "", plan.drop_columns)
        dropped["inapplicable"] = list(plan.drop_columns)
    d, high_missing = drop_high_missing(d, plan)
    if high_missing:
        dropped["missing"] = high_missing
    features = d.schema.features
    if not features:
        raise DataError("no feature columns left to fit")

    columns, kinds, fills, vocabs, clips = [], [], [], {}, {}
    for spec in features:
        col = d.columns[spec.name]
        if spec.is_float:
            present = col[~np.isnan(col)]
            if len(present) == 0:
                fill = 0.0
            elif plan.numeric_imputation == "median":
                fill = float(np.median(present))
            else:
                fill = float(np.mean(present))
            if plan.winsorize is not None and len(present):
                lo, hi = np.quantile(present, plan.winsorize)
                clips[spec.name] = (float(lo), float(hi))
        else:
            present = [v for v in col if v is not None]
            if not present:
                fill, vocab = "", ("",)
            else:
                fill = _mode(present)
                vocab = tuple(sorted(set(present)))
            if len(vocab) > plan.max_cardinality:
                raise DataError(
                    f"categorical column {spec.name!r} has {len(vocab)} levels, above max_cardinality {plan.max_cardinality}"
                )
            vocabs[spec.name] = vocab
        columns.append(spec.name)
        kinds.append(spec.kind)
        fills.append(fill)

    X, names = _encode(d, columns, kinds, fills, vocabs, clips)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    keep = stds > 1e-12 * np.maximum(1.0, np.abs(means))
    notes = []
    constant = [n for n, k in zip(names, keep) if not k]
    if constant:
        dropped["constant"] = constant
        notes.append(f"dropped {len(constant)} constant feature(s): {', '.join(constant)}")
    if not keep.any():
        raise DataError("every encoded feature is constant")
    if not plan.standardize:
        means = np.zeros_like(means)
        stds = np.ones_like(stds)
    return FittedPreprocessor(
        input_columns=tuple(columns),
        kinds=tuple(kinds),
        fill_values=tuple(fills),
        vocabularies=vocabs,
        clip_bounds=clips,
        keep_mask=keep,
        means=means[keep],
        stds=stds[keep],
        feature_names=tuple(n for n, k in zip(names, keep) if k),
        dropped=dropped,
        notes=tuple(notes),
    )


def transform(fp: FittedPreprocessor, d: Dataset) -> np.ndarray:
    """Fully numeric, finite feature matrix for ``d`` under ``fp``."""
    absent = [c for c in fp.input_columns if c not in d.columns]
    if absent:
        raise SchemaError(f"data lacks fitted column(s) {absent}")
    for name, kind in zip(fp.input_columns, fp.kinds):
        if d.schema.column(name).kind != kind:
            raise SchemaError(f"column {name!r} is {d.schema.column(name).kind}, fitted as {kind}")
    X, _ = _encode(d, fp.input_columns, fp.kinds, fp.fill_values, fp.vocabularies, fp.clip_bounds)
    X = (X[:, fp.keep_mask] - fp.means) / fp.stds
    if not np.isfinite(X).all():
        raise DataError("transform produced non-finite values")
    return X


def input_schema(fp: FittedPreprocessor, schema: Schema) -> Schema:
    """The part of ``schema`` a fitted preprocessor reads."""
    keep = set(fp.input_columns) | {schema.row_type.name, schema.target.name}
    return schema.without([c for c in schema.names if c not in keep])
