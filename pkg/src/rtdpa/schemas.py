"""Request and response bodies of the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

Cell = Optional[float | int | str]


class _Body(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RowsRequest(_Body):
    rows: list[dict[str, Cell]] = Field(..., min_length=1)


class PredictRequest(RowsRequest):
    skip_unknown: bool = False


class RowPrediction(_Body):
    row_index: int
    row_type: Optional[str]
    predicted_class: Optional[int]
    scores: dict[str, float]
    status: str
    error: str = ""


class PredictResponse(_Body):
    class_codes: list[int]
    predictions: list[RowPrediction]


class MetricsReportOut(_Body):
    classifier: str
    row_type: str
    train_accuracy: float
    test_accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: Optional[float]
    cohens_kappa: float
    running_time_seconds: Optional[float]
    diagnostics: dict[str, Any] = {}


class EvaluateResponse(_Body):
    reports: list[MetricsReportOut]


class MonitorRequest(RowsRequest):
    threshold: float = Field(0.05, ge=0.0)


class TypeDriftOut(_Body):
    row_type: str
    status: str
    n_rows: int
    metrics: dict[str, Optional[float]]
    flags: list[str]


class MonitorResponse(_Body):
    types: list[TypeDriftOut]


class ModelInfo(_Body):
    row_types: list[str]
    class_codes: list[int]
    classifiers: dict[str, str]
    fingerprint: str
    created: str


class Health(_Body):
    status: str
    model_loaded: bool
