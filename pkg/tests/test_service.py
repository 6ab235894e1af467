import json
import os
import threading
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
import pytest

from gradelens.ingest import load_table, validate_rows
from gradelens.models import ModelConfig, fit
from gradelens.models.artifact import save_model
from gradelens.preprocess import encode_and_normalize, impute, split
from gradelens.risk import RiskConfig, score_roster, score_student
from gradelens.schema import load_schema
from gradelens.service import build_state, make_server


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    """Live server over models trained on the tiny cohort.

    The regression champion is a deliberately memorizing full-depth tree so
    what-if submissions of training rows return their exact grades.
    """
    from tests.conftest import write_tiny_dataset

    tmp = tmp_path_factory.mktemp("svc")
    paths = write_tiny_dataset(tmp)
    schema = load_schema(paths["schema"])
    table, _ = validate_rows(load_table(paths["csv"], schema))
    table = impute(table)
    sp = split(table.n_rows, 7)
    dm = encode_and_normalize(table, np.arange(table.n_rows))  # fit on all rows

    cls_cfg = ModelConfig("logistic", "classification", {"C": 10.0})
    classifier = fit(cls_cfg, dm.X, dm.y_pass.astype(float), dm.feature_names)
    reg_cfg = ModelConfig("tree", "regression", {}, seed=0)
    regressor = fit(reg_cfg, dm.X, dm.y_grade, dm.feature_names)

    art_dir = tmp / "artifacts"
    art_dir.mkdir()
    fp = {"n_rows": table.n_rows, "n_features": dm.X.shape[1], "seed": 7}
    save_model(classifier, cls_cfg, dm.norm, fp, art_dir / "cls.json")
    save_model(regressor, reg_cfg, dm.norm, fp, art_dir / "reg.json")

    roster = score_roster(
        dm.X, [f"T{i:04d}" for i in range(table.n_rows)], classifier, regressor, dm.norm
    )
    roster_doc = {"roster": [s.to_dict() for s in roster]}

    os.environ["GRADELENS_TEST_TOKEN"] = "sekrit"
    state = build_state(
        art_dir / "cls.json",
        art_dir / "reg.json",
        schema,
        roster_doc,
        RiskConfig(threshold=0.70, top_k=3),
        metrics={"demo": True},
        token_env="GRADELENS_TEST_TOKEN",
    )
    server = make_server(state, port=0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    raw = table
    yield {
        "port": port,
        "state": state,
        "table": raw,
        "dm": dm,
        "classifier": classifier,
        "regressor": regressor,
    }
    server.shutdown()
    server.server_close()


def call(port, path, method="GET", body=None, token="sekrit"):
    url = f"http://127.0.0.1:{port}{path}"
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method)
    if token:
        req.add_header("Authorization", f"Bearer {token}")
    if data:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode())


def test_health_needs_no_token(service):
    status, doc = call(service["port"], "/api/health", token=None)
    assert status == 200 and doc["status"] == "ok"


def test_missing_token_rejected(service):
    status, doc = call(service["port"], "/api/roster", token=None)
    assert status == 401


def test_wrong_token_rejected(service):
    status, _ = call(service["port"], "/api/roster", token="wrong")
    assert status == 401


def test_roster_sorted_desc(service):
    status, doc = call(service["port"], "/api/roster")
    assert status == 200
    p = [r["p_fail"] for r in doc["roster"]]
    assert p == sorted(p, reverse=True)
    assert len(doc["roster"]) == 240


def test_threshold_get_put_and_flag_monotonicity(service):
    port = service["port"]
    status, doc = call(port, "/api/threshold")
    assert status == 200 and doc["threshold"] == 0.70
    _, before = call(port, "/api/roster")
    flagged_70 = {r["student_id"] for r in before["roster"] if r["flagged"]}

    status, doc = call(port, "/api/threshold", "PUT", {"threshold": 0.5})
    assert status == 200 and doc["threshold"] == 0.5
    _, after = call(port, "/api/roster")
    flagged_50 = {r["student_id"] for r in after["roster"] if r["flagged"]}
    assert flagged_70 <= flagged_50

    # restore and verify flags recomputed in place
    call(port, "/api/threshold", "PUT", {"threshold": 0.7})
    _, restored = call(port, "/api/roster")
    assert {r["student_id"] for r in restored["roster"] if r["flagged"]} == flagged_70


def test_threshold_out_of_range_conflict(service):
    for bad in (0.0, 1.0, 1.5, -0.2):
        status, _ = call(service["port"], "/api/threshold", "PUT", {"threshold": bad})
        assert status == 409


def test_threshold_malformed_body(service):
    status, _ = call(service["port"], "/api/threshold", "PUT", {"nope": 1})
    assert status == 400


def test_predict_memorized_training_row(service):
    table, dm = service["table"], service["dm"]
    row = table.row(3)
    body = {name: row[name] for name in dm.feature_names}
    status, doc = call(service["port"], "/api/predict", "POST", body)
    assert status == 200
    assert doc["predicted_grade"] == pytest.approx(float(row["final_grade"]), abs=1e-9)


def test_predict_equals_direct_score(service):
    """The service adds no logic on top of score_student."""
    table, dm = service["table"], service["dm"]
    row = table.row(11)
    body = {name: row[name] for name in dm.feature_names}
    status, doc = call(service["port"], "/api/predict", "POST", body)
    assert status == 200
    x = dm.norm.vectorize(body)
    direct = score_student(
        x, "what-if", service["classifier"], service["regressor"], dm.norm,
        RiskConfig(threshold=0.70, top_k=3),
    )
    assert doc["p_fail"] == pytest.approx(direct.p_fail, abs=1e-12)
    assert doc["predicted_grade"] == pytest.approx(direct.predicted_grade, abs=1e-12)
    assert doc["flagged"] == direct.flagged


def test_predict_unknown_feature_field_error(service):
    dm = service["dm"]
    body = {name: 1.0 for name in dm.feature_names}
    body["shift"] = "day"
    body["support"] = "no"
    body["hacked"] = 1
    status, doc = call(service["port"], "/api/predict", "POST", body)
    assert status == 400
    fields = {e["field"] for e in doc["fields"]}
    assert "hacked" in fields


def test_predict_out_of_range_field_error(service):
    table, dm = service["table"], service["dm"]
    row = table.row(0)
    body = {name: row[name] for name in dm.feature_names}
    body["entry_score"] = 999
    status, doc = call(service["port"], "/api/predict", "POST", body)
    assert status == 400
    assert any(e["field"] == "entry_score" for e in doc["fields"])


def test_predict_missing_feature_field_error(service):
    status, doc = call(service["port"], "/api/predict", "POST", {"entry_score": 10})
    assert status == 400
    fields = {e["field"] for e in doc["fields"]}
    assert "study_hours" in fields


def test_model_info(service):
    status, doc = call(service["port"], "/api/model")
    assert status == 200
    assert doc["classification"]["family"] == "logistic"
    assert doc["regression"]["family"] == "tree"
    assert doc["classification"]["format_version"] == 1
    names = {f["name"] for f in doc["features"]}
    assert "entry_score" in names and "shift" in names
    shift = next(f for f in doc["features"] if f["name"] == "shift")
    assert shift["values"] == ["day", "evening"]
    assert doc["pass_threshold"] == 10.0


def test_unknown_endpoint_404(service):
    status, _ = call(service["port"], "/api/nothing")
    assert status == 404


def test_concurrent_threshold_updates_consistent(service):
    """Readers never observe a (threshold, flags) mismatch."""
    port = service["port"]
    stop = threading.Event()
    bad = []

    def reader():
        while not stop.is_set():
            _, doc = call(port, "/api/roster")
            thr = doc["threshold"]
            for r in doc["roster"]:
                if r["flagged"] != (r["p_fail"] > thr):
                    bad.append((thr, r))
                    return

    threads = [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    for value in (0.3, 0.8, 0.55, 0.7, 0.4, 0.7):
        call(port, "/api/threshold", "PUT", {"threshold": value})
    stop.set()
    for t in threads:
        t.join(timeout=10)
    assert not bad
    call(port, "/api/threshold", "PUT", {"threshold": 0.7})
