"""Deterministic bank-shaped loan data with published partition sizes and missing shares."""

from __future__ import annotations

import csv
import io

import numpy as np

from rtdpa.dataset import ColumnSpec, Schema

PERSONAL_COUNTS = {1: 4398, 2: 126, 3: 129, 4: 3}
AGRICULTURE_COUNTS = {1: 17496, 2: 294, 3: 2577, 4: 210}

# (column -> missing rows) per type; everything else is fully populated
PERSONAL_MISSING = {"OPINIONDT": 4437, "RENEWALDT": 4656, "WOSACD": 4568, "DIRFINFLG": 4656,
                    "DRYLAND": 4656, "WETLAND": 4656}
AGRICULTURE_MISSING = {"UNIFUNFLG": 15771, "OPINIONDT": 12000, "RENEWALDT": 9000}

SCHEMA = Schema((
    ColumnSpec("ACCTNO", "identifier", "ignored"),
    ColumnSpec("LOANTYPE", "categorical", "row_type"),
    ColumnSpec("AMOUNT", "numeric"),
    ColumnSpec("RATE", "numeric"),
    ColumnSpec("SEGCD", "categorical"),
    ColumnSpec("OPENINGDT", "date"),
    ColumnSpec("OPINIONDT", "date"),
    ColumnSpec("RENEWALDT", "date"),
    ColumnSpec("WOSACD", "categorical"),
    ColumnSpec("DIRFINFLG", "categorical"),
    ColumnSpec("UNIFUNFLG", "categorical"),
    ColumnSpec("DRYLAND", "numeric"),
    ColumnSpec("WETLAND", "numeric"),
    ColumnSpec("IRAC", "numeric", "target"),
), ("",), {1: "Standard", 2: "Sub-standard", 3: "Doubtful", 4: "Loss"})


def _block(name, counts, missing, rng, start):
    y = np.repeat(list(counts), list(counts.values()))
    n = len(y)
    cells = {
        "ACCTNO": [f"A{start + i:06d}" for i in range(n)],
        "LOANTYPE": [name] * n,
        "AMOUNT": [f"{v:.2f}" for v in rng.gamma(2.0, 5000.0, n) * y],
        "RATE": [f"{v:.3f}" for v in 8 + y + rng.normal(0, 0.5, n)],
        "SEGCD": list(rng.choice(["A", "B", "C"], n)),
        "OPENINGDT": ["2015-06-01"] * n,
        "OPINIONDT": ["2020-01-15"] * n,
        "RENEWALDT": ["2021-03-01"] * n,
        "WOSACD": list(rng.choice(["W1", "W2"], n)),
        "DIRFINFLG": ["Y"] * n,
        "UNIFUNFLG": list(rng.choice(["N", "Y"], n)),
        "DRYLAND": [f"{v:.2f}" for v in rng.gamma(2.0, 1.0, n)],
        "WETLAND": [f"{v:.2f}" for v in rng.gamma(2.0, 1.0, n)],
        "IRAC": [str(int(c)) for c in y],
    }
    for col, k in missing.items():
        for i in rng.choice(n, size=k, replace=False):
            cells[col][i] = ""
    return [[cells[c][i] for c in SCHEMA.names] for i in range(n)]


def bank_csv(seed: int = 7) -> str:
    rng = np.random.default_rng(seed)
    rows = _block("personal", PERSONAL_COUNTS, PERSONAL_MISSING, rng, 0)
    rows += _block("agriculture", AGRICULTURE_COUNTS, AGRICULTURE_MISSING, rng, len(rows))
    rows = [rows[i] for i in rng.permutation(len(rows))]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCHEMA.names)
    w.writerows(rows)
    return buf.getvalue()
