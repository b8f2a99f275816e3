import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pair_auc
from rtdpa.errors import MetricError
from rtdpa.metrics import (
    ConfusionMatrix,
    MetricsReport,
    accuracy,
    best_estimator_lines,
    binary_auc,
    cohens_kappa,
    confusion_matrix,
    evaluate,
    format_running_time,
    precision_recall_f1,
    render_table,
    roc_auc_ovr,
)

CM = ConfusionMatrix(np.array([[45, 5], [10, 40]]), (1, 2))


def test_confusion_matrix_hand_count():
    assert confusion_matrix([1, 1, 2], [1, 2, 2], [1, 2]).counts.tolist() == [[1, 1], [0, 1]]


def test_perfect_predictions_give_diagonal():
    cm = confusion_matrix([1, 2, 3, 3], [1, 2, 3, 3], [1, 2, 3])
    assert (cm.counts == np.diag([1, 1, 2])).all()


def test_empty_class_gives_zero_row_and_column():
    cm = confusion_matrix([1, 2], [1, 2], [1, 2, 3])
    assert cm.counts[2].sum() == 0 and cm.counts[:, 2].sum() == 0


def test_unknown_label_rejected():
    with pytest.raises(MetricError):
        confusion_matrix([1, 5], [1, 1], [1, 2])


def test_accuracy_values():
    assert accuracy(confusion_matrix([1, 1, 2, 2], [1, 1, 2, 1], [1, 2])) == 0.75
    assert accuracy(confusion_matrix([1, 2], [1, 2], [1, 2])) == 1.0


def test_uniform_random_accuracy_is_chance():
    rng = np.random.default_rng(0)
    y = rng.integers(1, 5, size=20000)
    p = rng.integers(1, 5, size=20000)
    assert abs(accuracy(confusion_matrix(y, p, [1, 2, 3, 4])) - 0.25) < 0.03


def test_precision_recall_f1_per_class_arithmetic():
    prf = precision_recall_f1(CM)
    P = (45 / 55, 40 / 45)
    R = (0.9, 0.8)
    F = tuple(2 * p * r / (p + r) for p, r in zip(P, R))
    assert prf.per_class_precision == pytest.approx(P, abs=1e-12)
    assert prf.per_class_recall == pytest.approx(R, abs=1e-12)
    assert prf.f1 == pytest.approx(sum(F) / 2, abs=1e-9)
    assert prf.precision == pytest.approx(sum(P) / 2, abs=1e-9)


def test_perfect_prf():
    assert tuple(precision_recall_f1(confusion_matrix([1, 2], [1, 2], [1, 2]))) == (1.0, 1.0, 1.0)


def test_absent_class_contributes_zero_and_is_flagged():
    prf = precision_recall_f1(confusion_matrix([1, 2], [1, 2], [1, 2, 3]))
    assert prf.per_class_f1[2] == 0.0 and prf.undefined == (3,)
    assert prf.f1 == pytest.approx(2 / 3)


def test_kappa_fixture():
    # p_o = 0.85, p_e = (50*55 + 50*45) / 100^2 = 0.5
    assert cohens_kappa(CM) == pytest.approx(0.70, abs=1e-9)


def test_kappa_edges():
    assert cohens_kappa(confusion_matrix([1, 2, 2], [1, 2, 2], [1, 2])) == 1.0
    cm = ConfusionMatrix(np.array([[25, 25], [25, 25]]), (1, 2))
    assert cohens_kappa(cm) == pytest.approx(0.0, abs=1e-12)


def test_auc_fixed_examples():
    assert binary_auc([0.9, 0.4], [0.8, 0.3]) == 0.75
    assert binary_auc([0.9, 0.8], [0.2, 0.1]) == 1.0
    assert binary_auc([0.5, 0.5], [0.5, 0.5, 0.5]) == 0.5


def test_ovr_auc_requires_probability_rows():
    with pytest.raises(MetricError, match="sum to 1"):
        roc_auc_ovr([1, 2], np.array([[0.9, 0.9], [0.1, 0.1]]), [1, 2])


def test_ovr_auc_skips_single_sided_class():
    S = np.array([[0.8, 0.2, 0.0], [0.3, 0.7, 0.0], [0.6, 0.4, 0.0]])
    detail = roc_auc_ovr([1, 2, 1], S, [1, 2, 3])
    assert detail.skipped == (3,) and detail.auc == 1.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 6)), min_size=2, max_size=300))
def test_auc_matches_pair_counting(pairs):
    labels = np.array([p[0] for p in pairs])
    scores = np.array([p[1] / 6 for p in pairs])
    if labels.all() or not labels.any():
        return
    assert binary_auc(scores[labels == 1], scores[labels == 0]) == pair_auc(scores[labels == 1],
                                                                          scores[labels == 0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)), min_size=1, max_size=80))
def test_metric_ranges(pairs):
    y, p = zip(*pairs)
    cm = confusion_matrix(y, p, [1, 2, 3, 4])
    prf = precision_recall_f1(cm)
    for v in (accuracy(cm), prf.precision, prf.recall, prf.f1):
        assert 0.0 <= v <= 1.0
    assert -1.0 <= cohens_kappa(cm) <= 1.0


def test_evaluate_populates_every_field():
    rng = np.random.default_rng(0)
    y = rng.integers(1, 4, 60)
    S = rng.dirichlet(np.ones(3), 60)
    ev = evaluate(y, S.argmax(1) + 1, S, [1, 2, 3])
    for v in (ev.accuracy, ev.precision, ev.recall, ev.f1, ev.roc_auc):
        assert 0.0 <= v <= 1.0
    assert ev.diagnostics["confusion_matrix"]


def report(name, acc, prec, kappa, seconds=None, rt="personal"):
    return MetricsReport(name, rt, 1.0, acc, prec, 0.9, 0.9, 0.95, kappa, seconds)


def test_table_columns_and_reference_row():
    text = render_table([report("XGBClassifier", 0.9989, 0.9892, 0.9915, 0.5)], title="Model Performance")
    lines = text.splitlines()
    assert lines[0] == "Model Performance"
    assert [h.strip() for h in lines[1].split("|")] == [
        "Classifier", "Train Accuracy", "Test Accuracy", "Precision", "Recall", "F1 Score",
        "ROC AUC", "Cohen's Kappa", "Running Time"]
    cells = [c.strip() for c in lines[3].split("|")]
    assert cells[2] == "0.9989" and cells[3] == "0.9892" and cells[7] == "0.9915" and cells[8] == "00:00.5000"


def test_table_row_type_column():
    text = render_table([report("LGBMClassifier", 0.9966, 0.97, 0.95, rt="agriculture")], with_row_type=True)
    header = [h.strip() for h in text.splitlines()[0].split("|")]
    assert header[:3] == ["Classifier", "Row Type", "Train Accuracy"]
    cells = [c.strip() for c in text.splitlines()[2].split("|")]
    assert cells[1] == "agriculture" and cells[3] == "0.9966" and cells[-1] == "-"


def test_running_time_format():
    assert format_running_time(None) == "-"
    assert format_running_time(75.25) == "01:15.2500"


def test_best_estimator_lines():
    a = report("A", 0.9, 0.8, 0.7, 2.0)
    b = report("B", 0.95, 0.7, 0.7, 1.0)
    lines = best_estimator_lines([a, b])
    assert len(lines) == 8
    assert lines[1] == "Best estimator based on Test Accuracy: B (Test Accuracy: 0.95)"
    assert lines[2].startswith("Best estimator based on Precision: A")
    assert lines[6].startswith("Best estimator based on Cohen's Kappa: A")   # tie keeps the first
    assert lines[7] == "Best estimator based on Running Time: B (Running Time: 0 days 00:00:01.000000)"


def test_single_model_named_for_every_metric():
    lines = best_estimator_lines([report("Only", 0.9, 0.8, 0.7)])
    assert len(lines) == 7 and all(": Only (" in line for line in lines)


def test_nan_renders_as_nan():
    r = MetricsReport("A", "t", 1.0, 1.0, 1.0, 1.0, 1.0, math.nan, 1.0, None)
    assert "nan" in render_table([r])
