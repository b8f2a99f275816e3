"""Synthetic row-typed credit-style benchmark.

Each row type places its classes at the corners of a square on the shared
features ``F1``/``F2``; the corner assignment is rotated per type, so the
same region of feature space means different classes for different types
and a model that ignores the row type is handicapped by construction.
Class sizes follow fixed proportions (largest-remainder rounding), which
reproduces a heavily imbalanced four-class target.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from rtdpa.augmentation import largest_remainder
from rtdpa.dataset import ColumnSpec, Schema
from rtdpa.errors import SchemaError

# corner of class k (1..4) for orientation 0; other orientations rotate by 90 degrees
CORNERS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
CLASS_NAMES = ("Standard", "Sub-standard", "Doubtful", "Loss")
SEGMENTS = ("A", "B", "C", "D", "E")


@dataclass(frozen=True)
class SynthType:
    name: str
    proportions: tuple[float, ...]
    n_rows: int = 5000
    orientation: int = 0               # quarter turns applied to the class corners
    has_land_columns: bool = False     # DRYLAND / WETLAND apply to this type

    def __post_init__(self):
        p = np.asarray(self.proportions, dtype=float)
        if len(p) != 4 or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise SchemaError(f"type {self.name!r}: need 4 non-negative proportions summing to 1")
        if self.n_rows < 1:
            raise SchemaError(f"type {self.name!r}: n_rows must be positive")


DEFAULT_TYPES = (
    SynthType("personal", (0.9446, 0.0271, 0.0277, 0.0006), 5000, 0, False),
    SynthType("agriculture", (0.8503, 0.0143, 0.1252, 0.0102), 5000, 2, True),
)


@dataclass(frozen=True)
class SynthSpec:
    types: tuple[SynthType, ...] = DEFAULT_TYPES
    label_mode: str = "gaussian"        # "gaussian" clusters or noiseless-by-default "rule" regions
    separation: float = 3.0
    noise: float = 1.0
    n_noise_features: int = 3
    missing_rate: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if len(self.types) < 2:
            raise SchemaError("the benchmark needs at least two row types")
        names = [t.name for t in self.types]
        if len(set(names)) != len(names):
            raise SchemaError("row type names must be unique")
        turns = [t.orientation % 4 for t in self.types]
        if len(set(turns)) != len(turns):
            raise SchemaError("row types must use distinct orientations so their decision rules differ")
        if self.label_mode not in ("gaussian", "rule"):
            raise SchemaError(f"unknown label mode {self.label_mode!r}")
        if self.noise < 0 or self.separation <= 0:
            raise SchemaError("noise must be >= 0 and separation > 0")
        if not 0.0 <= self.missing_rate < 0.7:
            raise SchemaError("missing_rate must lie in [0, 0.7)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthSpec":
        obj = dict(obj)
        if "types" in obj:
            obj["types"] = tuple(SynthType(**{**t, "proportions": tuple(t["proportions"])}) for t in obj["types"])
        try:
            return cls(**obj)
        except TypeError as exc:
            raise SchemaError(f"bad synthetic spec: {exc}") from None


def rotate(points: np.ndarray, turns: int) -> np.ndarray:
    out = np.asarray(points, dtype=float)
    for _ in range(turns % 4):
        out = np.column_stack([-out[:, 1], out[:, 0]])
    return out


def class_means(spec: SynthSpec, t: SynthType) -> np.ndarray:
    return rotate(CORNERS, t.orientation) * spec.separation


def bayes_labels(spec: SynthSpec, t: SynthType, F: np.ndarray) -> np.ndarray | None:
    """Bayes-optimal class codes given the two informative features, when closed-form."""
    means = class_means(spec, t)
    if spec.label_mode == "rule":
        if spec.noise > 0:
            return None
        return rule_labels(spec, t, F)
    prior = np.asarray(t.proportions, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(prior)
    d2 = ((F[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    score = logp[None, :] - d2 / (2 * spec.noise ** 2)
    return np.argmax(score, axis=1) + 1


def rule_labels(spec: SynthSpec, t: SynthType, F: np.ndarray) -> np.ndarray:
    """Quadrant rule: the class whose (rotated) corner shares the point's quadrant."""
    back = rotate(F, -t.orientation)
    return np.where(back[:, 0] >= 0, np.where(back[:, 1] >= 0, 1, 2), np.where(back[:, 1] >= 0, 3, 4))


def schema(spec: SynthSpec = SynthSpec()) -> Schema:
    cols = [ColumnSpec("ROWID", "identifier", "ignored"), ColumnSpec("LOANTYPE", "categorical", "row_type")]
    cols += [ColumnSpec("F1", "numeric", "feature"), ColumnSpec("F2", "numeric", "feature")]
    cols += [ColumnSpec(f"NOISE{i + 1}", "numeric", "feature") for i in range(spec.n_noise_features)]
    cols += [
        ColumnSpec("SEGCD", "categorical", "feature"),
        ColumnSpec("OPENINGDT", "date", "feature"),
        ColumnSpec("DRYLAND", "numeric", "feature"),
        ColumnSpec("WETLAND", "numeric", "feature"),
        ColumnSpec("OPINIONDT", "date", "feature"),
        ColumnSpec("IRAC", "numeric", "target"),
    ]
    return Schema(tuple(cols), ("",), {k + 1: v for k, v in enumerate(CLASS_NAMES)})


@dataclass
class SynthResult:
    csv_text: str
    truth: dict
    schema: Schema = field(repr=False)


def _date(days: int) -> str:
    return str(np.datetime64("1970-01-01") + np.timedelta64(int(days), "D"))


def generate(spec: SynthSpec = SynthSpec()) -> SynthResult:
    rng = np.random.default_rng(spec.seed)
    blocks = []
    truth_types = {}
    for t in spec.types:
        counts = largest_remainder(t.proportions, t.n_rows)
        y = np.repeat(np.arange(1, 5), counts)
        means = class_means(spec, t)
        if spec.label_mode == "gaussian":
            F = means[y - 1] + rng.normal(0.0, 1.0, size=(t.n_rows, 2)) * spec.noise
        else:
            # uniform inside the class quadrant, kept off the axes, then perturbed
            mag = rng.uniform(0.25, 2.0, size=(t.n_rows, 2)) * spec.separation / 2
            F = np.sign(means[y - 1]) * mag + rng.normal(0.0, 1.0, size=(t.n_rows, 2)) * spec.noise
        bayes = bayes_labels(spec, t, F)
        info = {"n_rows": t.n_rows, "class_counts": {str(k + 1): int(c) for k, c in enumerate(counts)},
                "class_means": means.tolist()}
        if bayes is not None:
            info["bayes_accuracy"] = float((bayes == y).mean())
        truth_types[t.name] = info
        blocks.append((t, y, F, bayes))

    total = sum(t.n_rows for t in spec.types)
    order = rng.permutation(total)
    rows = []
    for t, y, F, bayes in blocks:
        n = t.n_rows
        noise = rng.normal(0.0, 1.0, size=(n, spec.n_noise_features))
        seg = rng.choice(len(SEGMENTS), size=n)
        opening = rng.integers(14000, 19000, size=n)
        dry = rng.gamma(2.0, 1.5, size=n)
        wet = rng.gamma(2.0, 1.0, size=n)
        opinion_present = rng.random(n) < 0.1
        opinion = rng.integers(17000, 19500, size=n)
        gaps = rng.random((n, spec.n_noise_features + 2)) < spec.missing_rate
        for i in range(n):
            cells = [t.name, repr(float(F[i, 0])), repr(float(F[i, 1]))]
            cells += ["" if gaps[i, j] else repr(float(noise[i, j])) for j in range(spec.n_noise_features)]
            cells.append("" if gaps[i, -2] else SEGMENTS[seg[i]])
            cells.append("" if gaps[i, -1] else _date(opening[i]))
            cells.append(repr(float(dry[i])) if t.has_land_columns else "")
            cells.append(repr(float(wet[i])) if t.has_land_columns else "")
            cells.append(_date(opinion[i]) if opinion_present[i] else "")
            cells.append(str(int(y[i])))
            rows.append((cells, None if bayes is None else int(bayes[i])))

    sch = schema(spec)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(sch.names)
    bayes_out = []
    for rank, src in enumerate(order):
        cells, b = rows[src]
        w.writerow([f"R{rank:06d}"] + cells)
        bayes_out.append(b)
    truth = {"spec": spec.to_dict(), "types": truth_types, "bayes_labels": bayes_out}
    return SynthResult(buf.getvalue(), truth, sch)


def write(spec: SynthSpec, out) -> tuple[Path, Path, Path]:
    """Write ``<out>`` (CSV), ``<out>.truth.json`` and ``<out>.schema.json``."""
    out = Path(out)
    res = generate(spec)
    out.write_text(res.csv_text, encoding="utf-8")
    truth_path = out.with_name(out.name + ".truth.json")
    truth_path.write_text(json.dumps(res.truth, sort_keys=True) + "\n", encoding="utf-8")
    schema_path = out.with_name(out.name + ".schema.json")
    schema_path.write_text(json.dumps(res.schema.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out, truth_path, schema_path
