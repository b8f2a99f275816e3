"""Tabular data loading, row-type partitioning, label policies and splits.

A :class:`Dataset` stores one numpy array per column. Numeric and date
columns are float arrays with ``nan`` marking a missing cell (dates are
days since 1970-01-01); categorical and identifier columns are object
arrays holding ``str`` or ``None``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from rtdpa.errors import DataError, SchemaError

KINDS = ("numeric", "categorical", "date", "identifier")
ROLES = ("feature", "row_type", "target", "ignored")
DEFAULT_SENTINELS = ("",)

_EPOCH = _dt.date(1970, 1, 1)


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str = "numeric"
    role: str = "feature"

    def __post_init__(self):
        if not self.name:
            raise SchemaError("column name must be nonempty")
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.kind == "identifier" and self.role == "feature":
            raise SchemaError(f"identifier column {self.name!r} cannot be a feature")

    @property
    def is_float(self) -> bool:
        return self.kind in ("numeric", "date")

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "role": self.role}


@dataclass(frozen=True)
class Schema:
    columns: tuple[ColumnSpec, ...]
    missing_values: tuple[str, ...] = DEFAULT_SENTINELS
    class_names: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError(f"duplicate column names: {dupes}")
        for role in ("row_type", "target"):
            hits = [c.name for c in self.columns if c.role == role]
            if len(hits) != 1:
                raise SchemaError(f"schema needs exactly one {role} column, found {len(hits)}: {hits}")
        if self.target.kind != "numeric":
            raise SchemaError(f"target column {self.target.name!r} must hold integer class codes")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"unknown column {name!r}")

    @property
    def row_type(self) -> ColumnSpec:
        return next(c for c in self.columns if c.role == "row_type")

    @property
    def target(self) -> ColumnSpec:
        return next(c for c in self.columns if c.role == "target")

    @property
    def features(self) -> list[ColumnSpec]:
        return [c for c in self.columns if c.role == "feature"]

    def without(self, names: Iterable[str]) -> "Schema":
        drop = set(names)
        return Schema(tuple(c for c in self.columns if c.name not in drop),
                      self.missing_values, self.class_names)

    def class_name(self, code: int) -> str:
        return self.class_names.get(int(code), str(int(code)))

    def to_dict(self) -> dict:
        out = {"columns": [c.to_dict() for c in self.columns],
               "missing_values": list(self.missing_values)}
        if self.class_names:
            out["class_names"] = {str(k): v for k, v in sorted(self.class_names.items())}
        return out

    @classmethod
    def from_dict(cls, obj) -> "Schema":
        if isinstance(obj, list):
            obj = {"columns": obj}
        if not isinstance(obj, dict):
            raise SchemaError("schema must be a JSON object or a list of column entries")
        unknown = set(obj) - {"columns", "missing_values", "class_names"}
        if unknown:
            raise SchemaError(f"unknown schema keys: {sorted(unknown)}")
        cols = []
        for entry in obj.get("columns", []):
            if not isinstance(entry, dict):
                raise SchemaError(f"column entry must be an object, got {entry!r}")
            bad = set(entry) - {"name", "kind", "role"}
            if bad:
                raise SchemaError(f"column {entry.get('name')!r}: unknown keys {sorted(bad)}")
            if "name" not in entry:
                raise SchemaError("column entry without a name")
            cols.append(ColumnSpec(**entry))
        names = {int(k): str(v) for k, v in obj.get("class_names", {}).items()}
        return cls(tuple(cols), tuple(obj.get("missing_values", DEFAULT_SENTINELS)), names)


def load_schema(path) -> Schema:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema file {path} is not valid JSON: {exc}") from None
    return Schema.from_dict(obj)


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: Schema
    columns: Mapping[str, np.ndarray]

    def __post_init__(self):
        lengths = {len(self.columns[n]) for n in self.schema.names if n in self.columns}
        missing = [n for n in self.schema.names if n not in self.columns]
        if missing:
            raise DataError(f"dataset lacks columns {missing}")
        if len(lengths) > 1:
            raise DataError("columns have unequal lengths")

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.schema.names[0]])

    def __len__(self):
        return self.n_rows

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def row_types(self) -> np.ndarray:
        return self.columns[self.schema.row_type.name]

    @property
    def targets(self) -> np.ndarray:
        """Integer class codes; raises if any target cell is missing."""
        col = self.columns[self.schema.target.name]
        if np.isnan(col).any():
            row = int(np.flatnonzero(np.isnan(col))[0])
            raise DataError(f"missing target value at row {row}")
        return col.astype(np.int64)

    @property
    def has_targets(self) -> bool:
        col = self.columns[self.schema.target.name]
        return len(col) > 0 and not np.isnan(col).all()

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.schema, {n: self.columns[n][idx] for n in self.schema.names})

    def drop(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        schema = self.schema.without(names)
        return Dataset(schema, {n: self.columns[n] for n in schema.names})

    def is_missing(self, name: str) -> np.ndarray:
        col = self.columns[name]
        if self.schema.column(name).is_float:
            return np.isnan(col)
        return np.array([v is None for v in col], dtype=bool)


def parse_cell(text: str, spec: ColumnSpec, sentinels: Sequence[str]):
    if text in sentinels:
        return math.nan if spec.is_float else None
    if spec.kind == "numeric":
        return float(text)
    if spec.kind == "date":
        return float((_dt.date.fromisoformat(text.strip()[:10]) - _EPOCH).days)
    return text


def _empty_column(spec: ColumnSpec, n: int) -> np.ndarray:
    if spec.is_float:
        return np.full(n, np.nan)
    return np.empty(n, dtype=object)


def from_records(records: Sequence[Mapping], schema: Schema) -> Dataset:
    """Build a dataset from dict rows (as received by the HTTP service).

    Values may be native numbers/strings or ``None``; strings go through the
    same parsing as CSV cells. Absent keys are missing cells, except the
    row-type column which is required.
    """
    n = len(records)
    cols = {c.name: _empty_column(c, n) for c in schema.columns}
    for i, rec in enumerate(records):
        unknown = set(rec) - set(schema.names)
        if unknown:
            raise DataError(f"row {i}: unknown columns {sorted(unknown)}")
        for spec in schema.columns:
            value = rec.get(spec.name)
            if value is None:
                cols[spec.name][i] = math.nan if spec.is_float else None
                continue
            try:
                if isinstance(value, str):
                    cols[spec.name][i] = parse_cell(value, spec, schema.missing_values)
                elif spec.is_float:
                    cols[spec.name][i] = float(value)
                else:
                    cols[spec.name][i] = str(value)
            except (TypeError, ValueError) as exc:
                raise DataError(f"row {i}, column {spec.name!r}: cannot parse {value!r} as {spec.kind}: {exc}") from None
    return Dataset(schema, cols)


def load_csv(path, schema: Schema) -> Dataset:
    """Read a UTF-8 CSV with a header row naming exactly the schema columns."""
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: not UTF-8 ({exc})") from None
        header = [h.strip() for h in header]
        absent = [n for n in schema.names if n not in header]
        extra = [h for h in header if h not in schema.names]
        if absent:
            raise SchemaError(f"{path}: header is missing column(s) {absent}")
        if extra:
            raise SchemaError(f"{path}: header has undeclared column(s) {extra}")
        positions = [header.index(n) for n in schema.names]
        raw = []
        try:
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}: line {line_no} has {len(row)} cells, expected {len(header)}")
                raw.append(row)
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: not UTF-8 ({exc})") from None
    if not raw:
        raise DataError(f"{path}: no data rows")
    n = len(raw)
    cols = {}
    sentinels = schema.missing_values
    for spec, pos in zip(schema.columns, positions):
        col = _empty_column(spec, n)
        for i, row in enumerate(raw):
            try:
                col[i] = parse_cell(row[pos], spec, sentinels)
            except ValueError:
                raise DataError(
                    f"{path}: row {i + 1}, column {spec.name!r}: cannot parse {row[pos]!r} as {spec.kind}"
                ) from None
        cols[spec.name] = col
    return Dataset(schema, cols)


def write_csv(d: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(d.schema.names)
        for i in range(d.n_rows):
            w.writerow([format_cell(d.columns[c.name][i], c) for c in d.schema.columns])


def format_cell(value, spec: ColumnSpec) -> str:
    if spec.is_float:
        if value is None or np.isnan(value):
            return ""
        if spec.kind == "date":
            return (_EPOCH + _dt.timedelta(days=int(value))).isoformat()
        f = float(value)
        return str(int(f)) if f.is_integer() else repr(f)
    return "" if value is None else str(value)


def partition_by_row_type(d: Dataset) -> dict[str, Dataset]:
    """Split rows by row type, in order of first appearance.

    Source order is preserved within each partition; the original row
    indices are available via :func:`partition_indices`.
    """
    return {rt: d.take(idx) for rt, idx in partition_indices(d).items()}


def partition_indices(d: Dataset) -> dict[str, np.ndarray]:
    types = d.row_types
    groups: dict[str, list[int]] = {}
    for i, t in enumerate(types):
        if t is None or t == "":
            raise DataError(f"missing row type at row {i}")
        groups.setdefault(str(t), []).append(i)
    return {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()}


@dataclass(frozen=True)
class LabelPolicy:
    """Conditional class merges.

    A merge ``(source, destination)`` fires when the source class has fewer
    than ``min_class_count`` members (``None`` makes every merge fire).
    Codes are original class codes, so applying a policy twice is the same
    as applying it once.
    """

    merges: tuple[tuple[int, int], ...] = ()
    min_class_count: int | None = 5

    def __post_init__(self):
        srcs = [s for s, _ in self.merges]
        if len(set(srcs)) != len(srcs):
            raise SchemaError("a class can be merged away only once")
        graph = dict(self.merges)
        for start in graph:
            seen, node = {start}, graph[start]
            while node in graph:
                if node in seen:
                    raise SchemaError(f"label merge graph has a cycle through {node}")
                seen.add(node)
                node = graph[node]


@dataclass(frozen=True, eq=False)
class TypedPartition:
    """Per-type training unit.

    ``y`` holds contiguous codes 1..K; ``class_codes[k - 1]`` is the original
    code reported for contiguous code ``k``.
    """

    row_type: str
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    class_codes: tuple[int, ...]

    def __post_init__(self):
        if len(self.y) < 1:
            raise DataError(f"partition {self.row_type!r} is empty")
        if self.X.shape[0] != len(self.y):
            raise DataError(f"partition {self.row_type!r}: {self.X.shape[0]} feature rows vs {len(self.y)} targets")
        if len(self.y) and (self.y.min() < 1 or self.y.max() > len(self.class_codes)):
            raise DataError("partition targets fall outside 1..K")

    @property
    def n(self) -> int:
        return len(self.y)

    def subset(self, indices) -> "TypedPartition":
        idx = np.asarray(indices, dtype=np.int64)
        return TypedPartition(self.row_type, self.X[idx], self.y[idx], self.feature_names, self.class_codes)

    def decode(self, codes) -> np.ndarray:
        lookup = np.asarray(self.class_codes, dtype=np.int64)
        return lookup[np.asarray(codes, dtype=np.int64) - 1]

    @classmethod
    def from_original(cls, row_type, X, original_codes, feature_names=(), universe=None) -> "TypedPartition":
        original_codes = np.asarray(original_codes, dtype=np.int64)
        universe = sorted(set(int(c) for c in (original_codes if universe is None else universe)))
        pos = {c: i + 1 for i, c in enumerate(universe)}
        y = np.array([pos[int(c)] for c in original_codes], dtype=np.int64)
        X = np.asarray(X, dtype=float).reshape(len(y), -1)
        return cls(row_type, X, y, tuple(feature_names), tuple(universe))


def label_code_map(original_codes, policy: LabelPolicy, universe=None) -> dict[int, int]:
    """Map every original code to its reported code after the policy's merges."""
    original_codes = np.asarray(original_codes, dtype=np.int64)
    universe = sorted(set(int(c) for c in (original_codes if universe is None else universe)))
    counts = {c: int((original_codes == c).sum()) for c in universe}
    mapping = {c: c for c in universe}
    for src, dst in policy.merges:
        # an absent source was merged away already; only the destination must exist
        if src in mapping and dst not in mapping:
            raise SchemaError(f"merge {src}->{dst} targets a code outside {universe}")
    changed = True
    # repeat so chained merges (a->b, b->c) resolve against post-merge counts
    while changed:
        changed = False
        for src, dst in policy.merges:
            live = [c for c in universe if mapping[c] == src]
            if not live:
                continue
            n_src = sum(counts[c] for c in live)
            fires = policy.min_class_count is None or n_src < policy.min_class_count
            if fires and dst in mapping:
                for c in live:
                    mapping[c] = dst
                changed = True
    return mapping


def apply_label_policy(p: TypedPartition, policy: LabelPolicy) -> TypedPartition:
    """Merge classes per ``policy`` and re-index the survivors contiguously."""
    if not policy.merges:
        return p
    original = p.decode(p.y)
    mapping = label_code_map(original, policy, universe=p.class_codes)
    survivors = sorted(set(mapping.values()))
    if not survivors:
        raise SchemaError("label policy leaves zero classes")
    pos = {c: i + 1 for i, c in enumerate(survivors)}
    y = np.array([pos[mapping[int(c)]] for c in original], dtype=np.int64)
    return TypedPartition(p.row_type, p.X, y, p.feature_names, tuple(survivors))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise SchemaError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


def _largest_remainder_counts(quotas: np.ndarray, total: int, lower, upper) -> np.ndarray:
    counts = np.clip(np.floor(quotas).astype(np.int64), lower, upper)
    while counts.sum() < total:
        room = counts < upper
        if not room.any():
            break
        rem = np.where(room, quotas - counts, -np.inf)
        counts[int(np.argmax(rem))] += 1
    while counts.sum() > total:
        room = counts > lower
        if not room.any():
            break
        rem = np.where(room, quotas - counts, np.inf)
        counts[int(np.argmin(rem))] -= 1
    return counts


def split_indices(y, s: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return sorted (train, test) index arrays for labels ``y``."""
    y = np.asarray(y)
    n = len(y)
    if n < 2:
        raise DataError("need at least 2 rows to split")
    n_test = int(round(s.test_fraction * n))
    if n_test <= 0 or n_test >= n:
        side = "test" if n_test <= 0 else "train"
        raise DataError(f"test_fraction {s.test_fraction} on {n} rows leaves an empty {side} split")
    rng = np.random.default_rng(s.seed)
    if not s.stratified:
        perm = rng.permutation(n)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])
    classes, counts = np.unique(y, return_counts=True)
    quotas = n_test * counts / n
    lower = np.zeros(len(counts), dtype=np.int64)
    # a class with two or more rows always keeps one in train
    upper = np.where(counts >= 2, counts - 1, counts)
    per_class = _largest_remainder_counts(quotas, n_test, lower, upper)
    test = []
    for c, k in zip(classes, per_class):
        members = np.flatnonzero(y == c)
        test.extend(members[rng.permutation(len(members))[:k]])
    test = np.sort(np.asarray(test, dtype=np.int64))
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    train = np.flatnonzero(mask)
    if len(train) == 0 or len(test) == 0:
        raise DataError("split produced an empty side")
    return train, test


def stratified_split(p: TypedPartition, s: SplitSpec) -> tuple[TypedPartition, TypedPartition]:
    train, test = split_indices(p.y, s)
    return p.subset(train), p.subset(test)
