"""HTTP service around a trained model: routed prediction, evaluation and monitoring."""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from rtdpa import __version__
from rtdpa import framework as fw
from rtdpa.dataset import from_records
from rtdpa.errors import RtdpaError
from rtdpa.schemas import (
    EvaluateResponse,
    Health,
    MetricsReportOut,
    ModelInfo,
    MonitorRequest,
    MonitorResponse,
    PredictRequest,
    PredictResponse,
    RowPrediction,
    RowsRequest,
    TypeDriftOut,
)


def _finite(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def create_app(model: fw.RtdpaModel | None = None) -> FastAPI:
    app = FastAPI(title="rtdpa", version=__version__)
    app.state.model = model

    def current() -> fw.RtdpaModel:
        if app.state.model is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        return app.state.model

    def rows_of(m, req: RowsRequest):
        try:
            return from_records(req.rows, m.schema)
        except RtdpaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None

    @app.get("/health", response_model=Health)
    def health():
        return Health(status="ok", model_loaded=app.state.model is not None)

    @app.get("/model", response_model=ModelInfo)
    def model_info():
        m = current()
        return ModelInfo(row_types=m.row_types, class_codes=m.class_codes,
                         classifiers={t: e.label for t, e in m.entries.items()},
                         fingerprint=m.fingerprint(), created=m.created)

    @app.post("/predict", response_model=PredictResponse)
    def predict(req: PredictRequest):
        m = current()
        d = rows_of(m, req)
        try:
            pred = fw.route_predict(m, d, skip_unknown=req.skip_unknown)
        except RtdpaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        out = []
        for i in range(d.n_rows):
            ok = pred.status[i] == "ok"
            out.append(RowPrediction(
                row_index=i, row_type=pred.row_types[i],
                predicted_class=int(pred.labels[i]) if ok else None,
                scores={str(c): float(s) for c, s in zip(pred.class_codes, pred.scores[i])} if ok else {},
                status=pred.status[i], error=pred.errors[i]))
        return PredictResponse(class_codes=pred.class_codes, predictions=out)

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: RowsRequest):
        m = current()
        d = rows_of(m, req)
        try:
            reports = fw.evaluate_model(m, d)
        except RtdpaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return EvaluateResponse(reports=[
            MetricsReportOut(**{**r.to_dict(), "roc_auc": _finite(r.roc_auc)}) for r in reports.values()])

    @app.post("/monitor", response_model=MonitorResponse)
    def monitor(req: MonitorRequest):
        m = current()
        d = rows_of(m, req)
        try:
            drift = fw.monitor(m, fw.MonitorBaseline.from_model(m, req.threshold), d)
        except RtdpaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return MonitorResponse(types=[
            TypeDriftOut(row_type=t.row_type, status=t.status, n_rows=t.n_rows,
                         metrics={k: _finite(v) for k, v in t.metrics.items()}, flags=t.flags)
            for t in drift.values()])

    return app
