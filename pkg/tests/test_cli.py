import csv
import io
import json

import numpy as np
import pytest

from conftest import DATA, GOLDEN
from rtdpa.cli import main

BANK = DATA / "bank_small.csv"
BANK_SCHEMA = DATA / "bank_small.schema.json"
BANK_CONFIG = DATA / "bank_small.config.json"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def bank_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "bank.rtdpa"
    assert main(["train", "--data", str(BANK), "--schema", str(BANK_SCHEMA), "--config", str(BANK_CONFIG),
                 "--out", str(path), "--no-timing"]) == 0
    return path


def test_inspect_matches_golden(capsys):
    code, out, _ = run(capsys, "inspect", "--data", BANK, "--schema", BANK_SCHEMA)
    assert code == 0
    assert out == (GOLDEN / "inspect_bank_small.txt").read_text()


def test_inspect_lists_fully_missing_columns_first(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "inspect", "--data", BANK, "--schema", BANK_SCHEMA, "--json", summary)
    assert code == 0
    block = out.split("Missing Values: personal")[1].splitlines()
    assert block[2].split()[0] in ("DIRFINFLG", "DRYLAND") and block[2].split()[-1] == "100.0"
    obj = json.loads(summary.read_text())
    assert obj["n_rows"] == 24
    assert obj["partitions"]["agriculture"] == {"Standard": 4, "Sub-standard": 2, "Doubtful": 2}


def test_train_matches_golden_and_is_repeatable(capsys, tmp_path):
    outs = []
    for i in range(2):
        code, out, _ = run(capsys, "train", "--data", BANK, "--schema", BANK_SCHEMA, "--config", BANK_CONFIG,
                           "--out", tmp_path / f"m{i}.rtdpa", "--no-timing")
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] == (GOLDEN / "train_bank_small.txt").read_text()


def test_train_writes_json_reports(capsys, tmp_path):
    target = tmp_path / "r.jsonl"
    code, _, _ = run(capsys, "train", "--data", BANK, "--schema", BANK_SCHEMA, "--config", BANK_CONFIG,
                     "--out", tmp_path / "m.rtdpa", "--json", target)
    assert code == 0
    lines = [json.loads(s) for s in target.read_text().splitlines()]
    assert sorted(r["row_type"] for r in lines) == ["agriculture", "personal"]
    assert all(r["running_time_seconds"] >= 0 for r in lines)


def test_evaluate_matches_golden(capsys, bank_model):
    code, out, _ = run(capsys, "evaluate", "--model", bank_model, "--model", bank_model, "--data", BANK,
                       "--no-timing")
    assert code == 0
    assert out == (GOLDEN / "evaluate_bank_small.txt").read_text()


def test_evaluate_names_one_model_per_metric(capsys, bank_model):
    _, out, _ = run(capsys, "evaluate", "--model", bank_model, "--model", bank_model, "--data", BANK,
                    "--no-timing")
    best = [line for line in out.splitlines() if line.startswith("Best estimator based on")]
    assert len(best) == 14
    assert all(line.count("DecisionTree") == 1 for line in best)


def test_predict_preserves_order_and_scores(capsys, bank_model, tmp_path):
    target = tmp_path / "p.csv"
    code, _, _ = run(capsys, "predict", "--model", bank_model, "--data", BANK, "--out", target)
    assert code == 0
    rows = list(csv.DictReader(target.open()))
    with BANK.open() as fh:
        ids = [r["ACCTNO"] for r in csv.DictReader(fh)]
    assert [r["row_id"] for r in rows] == ids
    assert all(r["status"] == "ok" for r in rows)
    for r in rows:
        scores = [float(r[f"score_{c}"]) for c in (1, 2, 3)]
        assert abs(sum(scores) - 1.0) < 1e-9
        assert int(r["predicted_class"]) == 1 + int(np.argmax(scores))


def test_predict_without_target_column(capsys, bank_model, tmp_path):
    with BANK.open() as fh:
        recs = list(csv.DictReader(fh))
    src = tmp_path / "no_target.csv"
    with src.open("w", newline="") as fh:
        w = csv.DictWriter(fh, [k for k in recs[0] if k != "IRAC"])
        w.writeheader()
        w.writerows({k: v for k, v in r.items() if k != "IRAC"} for r in recs)
    code, out, _ = run(capsys, "predict", "--model", bank_model, "--data", src)
    assert code == 0
    assert len(list(csv.DictReader(io.StringIO(out)))) == len(recs)


def test_predict_unknown_row_type(capsys, bank_model, tmp_path):
    text = BANK.read_text().splitlines()
    header, first = text[0], text[1]
    cols = header.split(",")
    cells = first.split(",")
    cells[cols.index("LOANTYPE")] = "housing"
    src = tmp_path / "unknown.csv"
    src.write_text("\n".join([header, first, ",".join(cells)]) + "\n")
    code, _, err = run(capsys, "predict", "--model", bank_model, "--data", src)
    assert code == 2 and "housing" in err
    code, out, _ = run(capsys, "predict", "--model", bank_model, "--data", src, "--skip-unknown")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["status"] for r in rows] == ["ok", "unrouted"]
    assert rows[1]["predicted_class"] == ""


def test_evaluate_requires_target(capsys, bank_model, tmp_path):
    with BANK.open() as fh:
        recs = list(csv.DictReader(fh))
    src = tmp_path / "blank.csv"
    with src.open("w", newline="") as fh:
        w = csv.DictWriter(fh, list(recs[0]))
        w.writeheader()
        w.writerows({**r, "IRAC": ""} for r in recs)
    code, _, err = run(capsys, "evaluate", "--model", bank_model, "--data", src)
    assert code == 2 and err.startswith("error:")


@pytest.mark.parametrize("argv, needle", [
    (["inspect", "--data", BANK, "--schema", "nowhere.json"], "nowhere.json"),
    (["inspect", "--data", "nowhere.csv", "--schema", BANK_SCHEMA], "nowhere.csv"),
    (["evaluate", "--model", "nowhere.rtdpa", "--data", BANK], "nowhere.rtdpa"),
])
def test_missing_inputs_exit_2(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == 2 and needle in err


def test_unknown_family_exits_2(capsys, tmp_path):
    cfg = json.loads(BANK_CONFIG.read_text())
    cfg["row_types"]["default"]["model"] = {"family": "quantum_forest"}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "train", "--data", BANK, "--schema", BANK_SCHEMA, "--config", path,
                       "--out", tmp_path / "m.rtdpa")
    assert code == 2 and "quantum_forest" in err


def test_corrupt_model_exits_2(capsys, tmp_path):
    path = tmp_path / "junk.rtdpa"
    path.write_bytes(b"not a model at all")
    code, _, _ = run(capsys, "predict", "--model", path, "--data", BANK)
    assert code == 2


def test_gen_synth_is_deterministic(capsys, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        code, _, _ = run(capsys, "gen-synth", "--out", tmp_path / name, "--seed", 5, "--rows", 120)
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "a.csv.truth.json").exists() and (tmp_path / "a.csv.schema.json").exists()
    assert len(outs[0].decode().splitlines()) == 1 + 2 * 120


def test_gen_synth_noiseless_rule_labels(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"label_mode": "rule", "noise": 0.0}))
    code, _, _ = run(capsys, "gen-synth", "--out", tmp_path / "r.csv", "--spec", spec, "--rows", 200)
    assert code == 0
    truth = json.loads((tmp_path / "r.csv.truth.json").read_text())
    assert all(t["bayes_accuracy"] == 1.0 for t in truth["types"].values())


def test_gen_synth_bad_spec_exits_2(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"label_mode": "fuzzy"}))
    code, _, err = run(capsys, "gen-synth", "--out", tmp_path / "r.csv", "--spec", spec)
    assert code == 2 and "fuzzy" in err
