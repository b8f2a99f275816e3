import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rtdpa import framework as fw  # noqa: E402
from rtdpa import synth  # noqa: E402
from rtdpa.dataset import load_csv  # noqa: E402

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"

SMALL_SPEC = synth.SynthSpec(types=(
    synth.SynthType("personal", (0.85, 0.05, 0.07, 0.03), 400, 0, False),
    synth.SynthType("agriculture", (0.80, 0.05, 0.10, 0.05), 400, 2, True),
), seed=11)

DT_CONFIG = {
    "seed": 3,
    "label_policy": {"merges": [[4, 3]]},
    "row_types": {
        "default": {"pca": {"enabled": False}, "augment": {"variant": "none"},
                    "model": {"family": "decision_tree", "params": {"max_depth": 6}}},
        "personal": {"preprocess": {"drop_columns": ["DRYLAND", "WETLAND"]}},
    },
}


@pytest.fixture(scope="session")
def small_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "small.csv"
    data, truth, schema = synth.write(SMALL_SPEC, out)
    cfg = out.with_name("dt.json")
    cfg.write_text(json.dumps(DT_CONFIG))
    return {"data": data, "truth": truth, "schema": schema, "config": cfg}


@pytest.fixture(scope="session")
def small_data(small_files):
    return load_csv(small_files["data"], synth.schema(SMALL_SPEC))


@pytest.fixture(scope="session")
def small_model(small_data):
    model, reports = fw.train_all(small_data, fw.parse_config(DT_CONFIG), created="2000-01-01T00:00:00+00:00")
    return model, reports


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
