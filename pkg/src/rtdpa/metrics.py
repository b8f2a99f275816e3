"""Multiclass evaluation metrics and the per-classifier performance report.

Precision, recall and F1 are macro averages (unweighted mean over classes);
a per-class 0/0 counts as 0 and the class is listed in ``undefined``.
ROC AUC is one-vs-rest, macro-averaged over classes that have both
positives and negatives.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from rtdpa.errors import MetricError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray     # rows = true class, columns = predicted class
    classes: tuple

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(y_true, y_pred, classes) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise MetricError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted labels")
    classes = tuple(classes)
    pos = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true.tolist(), y_pred.tolist()):
        if t not in pos or p not in pos:
            raise MetricError(f"label {t if t not in pos else p!r} not in class list {classes}")
        cm[pos[t], pos[p]] += 1
    return ConfusionMatrix(cm, classes)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise MetricError("accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


@dataclass(frozen=True)
class PrecisionRecallF1:
    precision: float
    recall: float
    f1: float
    per_class_precision: tuple
    per_class_recall: tuple
    per_class_f1: tuple
    undefined: tuple = ()

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


def _safe_div(num, den):
    return num / den if den > 0 else 0.0


def precision_recall_f1(cm: ConfusionMatrix, averaging: str = "macro") -> PrecisionRecallF1:
    if averaging != "macro":
        raise MetricError(f"unsupported averaging {averaging!r}")
    if cm.total == 0:
        raise MetricError("precision/recall of an empty confusion matrix")
    tp = np.diag(cm.counts).astype(float)
    pred = cm.counts.sum(axis=0).astype(float)
    true = cm.counts.sum(axis=1).astype(float)
    P, R, F, undefined = [], [], [], []
    for c, t, pp, tt in zip(cm.classes, tp, pred, true):
        p = _safe_div(t, pp)
        r = _safe_div(t, tt)
        f = _safe_div(2 * p * r, p + r)
        if pp == 0 or tt == 0:
            undefined.append(c)
        P.append(p)
        R.append(r)
        F.append(f)
    return PrecisionRecallF1(float(np.mean(P)), float(np.mean(R)), float(np.mean(F)),
                             tuple(P), tuple(R), tuple(F), tuple(undefined))


def binary_auc(scores_pos, scores_neg) -> float:
    """Mann-Whitney AUC with average ranks for ties (a tie counts one half)."""
    n_pos, n_neg = len(scores_pos), len(scores_neg)
    ranks = rankdata(np.concatenate([scores_pos, scores_neg]))
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class AucDetail:
    auc: float
    per_class: dict
    skipped: tuple


def roc_auc_ovr(y_true, scores, classes) -> AucDetail:
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=float)
    classes = tuple(classes)
    if scores.ndim != 2 or scores.shape != (len(y_true), len(classes)):
        raise MetricError(f"scores must have shape ({len(y_true)}, {len(classes)}), got {scores.shape}")
    if len(y_true) and np.abs(scores.sum(axis=1) - 1.0).max() > 1e-6:
        raise MetricError("score rows must sum to 1")
    per_class, skipped = {}, []
    for j, c in enumerate(classes):
        pos = y_true == c
        if pos.all() or not pos.any():
            skipped.append(c)
            continue
        per_class[c] = binary_auc(scores[pos, j], scores[~pos, j])
    if not per_class:
        raise MetricError("no class has both positive and negative instances")
    return AucDetail(float(np.mean(list(per_class.values()))), per_class, tuple(skipped))


def roc_auc_ovr_macro(y_true, scores, classes) -> float:
    return roc_auc_ovr(y_true, scores, classes).auc


def cohens_kappa(cm: ConfusionMatrix) -> float:
    n = cm.total
    if n == 0:
        raise MetricError("kappa of an empty confusion matrix")
    po = np.trace(cm.counts) / n
    pe = float((cm.counts.sum(axis=1) * cm.counts.sum(axis=0)).sum()) / (n * n)
    if pe >= 1.0:
        return 1.0 if po >= 1.0 else 0.0
    return float((po - pe) / (1.0 - pe))


# Column order follows the per-classifier performance tables.
REPORT_COLUMNS = (
    ("train_accuracy", "Train Accuracy"),
    ("test_accuracy", "Test Accuracy"),
    ("precision", "Precision"),
    ("recall", "Recall"),
    ("f1", "F1 Score"),
    ("roc_auc", "ROC AUC"),
    ("cohens_kappa", "Cohen's Kappa"),
    ("running_time_seconds", "Running Time"),
)


@dataclass(frozen=True)
class MetricsReport:
    classifier: str
    row_type: str
    train_accuracy: float
    test_accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    cohens_kappa: float
    running_time_seconds: float | None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsReport":
        return cls(**obj)


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float
    cohens_kappa: float
    diagnostics: dict


def evaluate(y_true, y_pred, scores, classes) -> Evaluation:
    """All test-side metrics for one prediction run.

    ``classes`` labels the score columns; the confusion matrix covers the
    classes observed in either ``y_true`` or ``y_pred``.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    observed = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    cm = confusion_matrix(y_true, y_pred, observed)
    prf = precision_recall_f1(cm)
    diagnostics = {"confusion_matrix": cm.counts.tolist(), "classes": [int(c) for c in observed]}
    if prf.undefined:
        diagnostics["undefined_precision_recall"] = [int(c) for c in prf.undefined]
    try:
        auc = roc_auc_ovr(y_true, scores, classes)
        auc_value = auc.auc
        if auc.skipped:
            diagnostics["auc_skipped_classes"] = [int(c) for c in auc.skipped]
    except MetricError as exc:
        auc_value = math.nan
        diagnostics["auc_error"] = str(exc)
    return Evaluation(accuracy(cm), prf.precision, prf.recall, prf.f1, auc_value,
                      cohens_kappa(cm), diagnostics)


def build_report(classifier: str, row_type: str, train_accuracy: float, test: Evaluation,
                 running_time_seconds: float | None) -> MetricsReport:
    return MetricsReport(
        classifier=classifier,
        row_type=row_type,
        train_accuracy=train_accuracy,
        test_accuracy=test.accuracy,
        precision=test.precision,
        recall=test.recall,
        f1=test.f1,
        roc_auc=test.roc_auc,
        cohens_kappa=test.cohens_kappa,
        running_time_seconds=running_time_seconds,
        diagnostics=test.diagnostics,
    )


def format_running_time(seconds: float | None) -> str:
    """``MM:SS.ffff`` as in the performance tables; ``-`` when not recorded."""
    if seconds is None:
        return "-"
    minutes, rest = divmod(float(seconds), 60.0)
    return f"{int(minutes):02d}:{rest:07.4f}"


def _timedelta_text(seconds: float) -> str:
    days, rest = divmod(float(seconds), 86400.0)
    hours, rest = divmod(rest, 3600.0)
    minutes, rest = divmod(rest, 60.0)
    return f"{int(days)} days {int(hours):02d}:{int(minutes):02d}:{rest:09.6f}"


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.4f}"


def render_table(reports, title: str | None = None, with_row_type: bool = False) -> str:
    headers = ["Classifier"] + (["Row Type"] if with_row_type else []) + [h for _, h in REPORT_COLUMNS]
    rows = []
    for r in reports:
        cells = [r.classifier] + ([r.row_type] if with_row_type else [])
        for key, _ in REPORT_COLUMNS:
            v = getattr(r, key)
            cells.append(format_running_time(v) if key == "running_time_seconds" else _fmt(v))
        rows.append(cells)
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    n_text = 2 if with_row_type else 1
    lines = []
    if title:
        lines.append(title)
    lines.append(" | ".join(h.ljust(w) for h, w in zip(headers, widths)))
    lines.append("-+-".join("-" * w for w in widths))
    for row in rows:
        lines.append(" | ".join(c.ljust(w) if i < n_text else c.rjust(w)
                                for i, (c, w) in enumerate(zip(row, widths))))
    return "\n".join(lines)


def best_estimator_lines(reports) -> list[str]:
    """One summary line per metric naming the best classifier.

    Higher is better except for running time; ties keep the first report.
    """
    reports = list(reports)
    lines = []
    for key, label in REPORT_COLUMNS:
        candidates = [r for r in reports if getattr(r, key) is not None
                      and not (isinstance(getattr(r, key), float) and math.isnan(getattr(r, key)))]
        if not candidates:
            continue
        if key == "running_time_seconds":
            best = min(candidates, key=lambda r: r.running_time_seconds)
            value = _timedelta_text(best.running_time_seconds)
        else:
            best = max(candidates, key=lambda r: getattr(r, key))
            value = repr(float(getattr(best, key)))
        lines.append(f"Best estimator based on {label}: {best.classifier} ({label}: {value})")
    return lines


def reports_to_jsonl(reports) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in reports)
