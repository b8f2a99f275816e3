"""Command-line interface.

Exit codes: 0 success, 1 internal failure, 2 input or configuration error.
Set ``RTDPA_LOG`` (DEBUG, INFO, WARNING, ERROR) for log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from rtdpa import __version__
from rtdpa import framework as fw
from rtdpa import synth
from rtdpa.dataset import Dataset, Schema, from_records, load_csv, load_schema, partition_indices
from rtdpa.errors import (
    ConfigError,
    DataError,
    ModelFileError,
    RoutingError,
    RtdpaError,
    SchemaError,
)
from rtdpa.metrics import best_estimator_lines, render_table, reports_to_jsonl
from rtdpa.preprocess import missing_value_report

log = logging.getLogger("rtdpa")

INPUT_ERRORS = (SchemaError, DataError, ConfigError, ModelFileError, RoutingError)


class InputError(RtdpaError):
    pass


def _setup_logging():
    level = os.environ.get("RTDPA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def _emit(text: str, out=None):
    out = out or sys.stdout
    out.write(text if text.endswith("\n") else text + "\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- inspect


def partition_table(d: Dataset) -> str:
    """Per row type class counts, one line per (type, class)."""
    sch = d.schema
    rows = []
    for rt, idx in sorted(partition_indices(d).items()):
        codes, counts = np.unique(d.take(idx).targets, return_counts=True)
        for code, n in zip(codes, counts):
            rows.append((rt, sch.class_name(int(code)), str(int(n))))
    headers = (sch.row_type.name, sch.target.name, "Count")
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [" | ".join(h.ljust(w) for h, w in zip(headers, widths)),
             "-+-".join("-" * w for w in widths)]
    last = None
    for rt, name, n in rows:
        shown = rt if rt != last else ""
        last = rt
        lines.append(" | ".join([shown.ljust(widths[0]), name.ljust(widths[1]), n.rjust(widths[2])]))
    return "\n".join(lines)


def cmd_inspect(args) -> int:
    schema = load_schema(args.schema)
    d = load_csv(args.data, schema)
    parts = []
    parts.append("Row Type Classification")
    parts.append(partition_table(d))
    summary = {"n_rows": d.n_rows, "partitions": {}, "missing": {}}
    for rt, idx in sorted(partition_indices(d).items()):
        sub = d.take(idx)
        report = missing_value_report(sub)
        parts.append("")
        parts.append(f"Missing Values: {rt} ({sub.n_rows} rows)")
        parts.append(report.render())
        codes, counts = np.unique(sub.targets, return_counts=True) if sub.has_targets else ([], [])
        summary["partitions"][rt] = {schema.class_name(int(c)): int(n) for c, n in zip(codes, counts)}
        summary["missing"][rt] = json.loads(report.to_json())
    _emit("\n".join(parts))
    if args.json:
        _write_json(args.json, summary)
    return 0


# ---------------------------------------------------------------- train / evaluate


def _strip_timing(reports):
    return [replace(r, running_time_seconds=None) for r in reports]


def cmd_train(args) -> int:
    schema = load_schema(args.schema)
    config = fw.load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    d = load_csv(args.data, schema)
    model, reports = fw.train_all(d, config)
    fw.save(model, args.out)
    rows = [reports[rt] for rt in sorted(reports)]
    if args.no_timing:
        rows = _strip_timing(rows)
    _emit(render_table(rows, title="Model Performance", with_row_type=True))
    for rt, msg in sorted(model.failures.items()):
        _emit(f"row type {rt} failed: {msg}", sys.stderr)
    if args.json:
        Path(args.json).write_text(reports_to_jsonl(rows), encoding="utf-8")
    return 0


def _read_rows(path, schema: Schema, need_target: bool) -> Dataset:
    """Load CSV rows; without ``need_target`` the target column may be absent."""
    if need_target:
        return load_csv(path, schema)
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    if header is None:
        raise DataError(f"{path}: empty file")
    if schema.target.name in [h.strip() for h in header]:
        return load_csv(path, schema)
    with path.open(newline="", encoding="utf-8") as fh:
        records = list(csv.DictReader(fh))
    if not records:
        raise DataError(f"{path}: no data rows")
    return from_records(records, schema)


def cmd_evaluate(args) -> int:
    models = [(p, fw.load(p)) for p in args.model]
    schema = load_schema(args.schema) if args.schema else models[0][1].schema
    d = _read_rows(args.data, schema, need_target=True)
    if not d.has_targets:
        raise DataError("evaluation data has no target values")
    by_type: dict[str, list] = {}
    for _, m in models:
        for rt, rep in fw.evaluate_model(m, d, with_timing=not args.no_timing).items():
            by_type.setdefault(rt, []).append(rep)
    parts, all_reports = [], []
    for rt in sorted(by_type):
        reps = by_type[rt]
        all_reports.extend(reps)
        parts.append(render_table(reps, title=f"Model Performance: {rt}"))
        parts.append("")
        parts.extend(best_estimator_lines(reps))
        parts.append("")
    _emit("\n".join(parts).rstrip("\n"))
    if args.json:
        Path(args.json).write_text(reports_to_jsonl(all_reports), encoding="utf-8")
    return 0


# ---------------------------------------------------------------- predict


def prediction_rows(m: fw.RtdpaModel, d: Dataset, skip_unknown: bool):
    pred = fw.route_predict(m, d, skip_unknown=skip_unknown)
    ident = next((c.name for c in d.schema.columns if c.kind == "identifier"), None)
    header = ["row_id", "row_type", "predicted_class"] + [f"score_{c}" for c in pred.class_codes] + ["status"]
    rows = []
    for i in range(d.n_rows):
        rid = d[ident][i] if ident else str(i)
        ok = pred.status[i] == "ok"
        cells = [rid if rid is not None else "", pred.row_types[i] or "",
                 str(int(pred.labels[i])) if ok else ""]
        cells += [repr(float(s)) if ok else "" for s in pred.scores[i]]
        cells.append(pred.status[i])
        rows.append(cells)
    return header, rows, pred


def cmd_predict(args) -> int:
    m = fw.load(args.model)
    schema = load_schema(args.schema) if args.schema else m.schema
    d = _read_rows(args.data, schema, need_target=False)
    header, rows, pred = prediction_rows(m, d, args.skip_unknown)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    unrouted = sum(s != "ok" for s in pred.status)
    if unrouted:
        log.warning("%d row(s) could not be routed", unrouted)
    return 0


# ---------------------------------------------------------------- gen-synth / serve


def cmd_gen_synth(args) -> int:
    if args.spec:
        try:
            obj = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError(f"spec file not found: {args.spec}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.spec}: invalid JSON ({exc})") from None
        spec = synth.SynthSpec.from_dict(obj)
    else:
        spec = synth.SynthSpec()
    if args.rows is not None:
        spec = replace(spec, types=tuple(replace(t, n_rows=args.rows) for t in spec.types))
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    data, truth, schema = synth.write(spec, args.out)
    _emit(f"wrote {data}\nwrote {truth}\nwrote {schema}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from rtdpa.service import create_app

    app = create_app(fw.load(args.model) if args.model else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level=os.environ.get("RTDPA_LOG", "warning").lower())
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtdpa", description="Row-type dependent predictive analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("inspect", help="class counts per row type and missing-value report")
    s.add_argument("--data", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--json", help="also write the summary as JSON to this path")
    s.set_defaults(func=cmd_inspect)

    s = sub.add_parser("train", help="train one pipeline per row type and save the model file")
    s.add_argument("--data", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="model file to write")
    s.add_argument("--seed", type=int, help="override the config's master seed")
    s.add_argument("--json", help="write per-type reports as JSON lines")
    s.add_argument("--no-timing", action="store_true", help="render running time as '-'")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="metrics tables and best-estimator summary")
    s.add_argument("--model", required=True, action="append", help="model file (repeat to compare)")
    s.add_argument("--data", required=True)
    s.add_argument("--schema", help="defaults to the schema stored in the model")
    s.add_argument("--json", help="write reports as JSON lines")
    s.add_argument("--no-timing", action="store_true", help="render running time as '-'")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("predict", help="route rows to their type's model and write scores")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--schema", help="defaults to the schema stored in the model")
    s.add_argument("--out", help="CSV output path (default: standard output)")
    s.add_argument("--skip-unknown", action="store_true",
                   help="emit rows of unregistered types with status 'unrouted' instead of failing")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("gen-synth", help="write the synthetic row-typed benchmark")
    s.add_argument("--out", required=True, help="CSV path; sidecars get .truth.json / .schema.json")
    s.add_argument("--seed", type=int)
    s.add_argument("--rows", type=int, help="rows per row type")
    s.add_argument("--spec", help="JSON file with generator settings")
    s.set_defaults(func=cmd_gen_synth)

    s = sub.add_parser("serve", help="serve a model over HTTP")
    s.add_argument("--model")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RtdpaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
