import json

import pytest
from fastapi.testclient import TestClient

from devtriage.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "ws")
    return TestClient(app)


def upload_fixtures(client, fixture_bytes):
    model_resp = client.post("/models", content=fixture_bytes("invoice_to_cash.pnml"),
                             headers={"content-type": "application/xml"})
    assert model_resp.status_code == 200, model_resp.text
    log_resp = client.post("/logs", content=fixture_bytes("invoice_to_cash.xes"),
                           headers={"content-type": "application/xml"})
    assert log_resp.status_code == 200, log_resp.text
    return model_resp.json()["version"], log_resp.json()["version"]


def test_model_upload_is_idempotent(client, fixture_bytes):
    v1, _ = upload_fixtures(client, fixture_bytes)
    again = client.post("/models", content=fixture_bytes("invoice_to_cash.pnml")).json()
    assert again["version"] == v1


def test_model_upload_reports_shape(client, fixture_bytes):
    resp = client.post("/models", content=fixture_bytes("invoice_to_cash.pnml"))
    body = resp.json()
    assert body["transitions"] == 4
    assert body["places"] == 5


def test_bad_model_yields_typed_400(client):
    resp = client.post("/models", content=b"not xml at all")
    assert resp.status_code == 400
    assert resp.json()["error"] == "MalformedInput"


def test_csv_log_upload(client):
    payload = {
        "format": "csv",
        "content": "case,activity\nc1,A\nc1,B\n",
        "mapping": {"case": "case", "activity": "activity"},
    }
    resp = client.post("/logs", json=payload)
    assert resp.status_code == 200
    assert resp.json()["traces"] == 1


def run_conformance(client, model_version, log_version):
    resp = client.post("/conformance/run", json={"model": model_version, "log": log_version})
    assert resp.status_code == 200, resp.text
    return resp.json()


def test_conformance_run_and_deviation_listing(client, fixture_bytes):
    mv, lv = upload_fixtures(client, fixture_bytes)
    body = run_conformance(client, mv, lv)
    assert len(body["alignments"]) == 1
    assert len(body["deviations"]) == 1
    listing = client.get("/deviations").json()["deviations"]
    assert [d["id"] for d in listing] == body["deviations"]
    assert listing[0]["pattern"] == "skip"
    assert listing[0]["skipped"] == ["Receive Payment"]


def test_full_walkthrough_concludes_negative_prevent(client, fixture_bytes):
    mv, lv = upload_fixtures(client, fixture_bytes)
    (dev_id,) = run_conformance(client, mv, lv)["deviations"]

    started = client.post("/assessments", json={
        "subject": {"kind": "instance", "id": dev_id},
        "model_version": mv, "log_version": lv,
    })
    assert started.status_code == 200
    a_id = started.json()["assessment"]["id"]
    assert started.json()["next"]["required_factors"] == ["data-quality"]

    answers = json.loads(
        __import__("importlib").resources.files("devtriage")
        .joinpath("fixtures/answers_invoice_to_cash.json").read_text("utf-8")
    )
    by_step = {a["step"]: a for a in answers}

    # five step posts across the individual and the aggregated assessment
    for step in (1, 2, 3):
        resp = client.post(f"/assessments/{a_id}/steps/{step}", json=by_step[step])
        assert resp.status_code == 200, resp.text
    assert resp.json()["assessment"]["state"] == "true-deviation-pending"

    sets = client.post("/sets", json={"mode": "same-seq"}).json()["sets"]
    assert len(sets) == 1
    set_id = sets[0]["id"]

    agg = client.post("/assessments", json={"subject": {"kind": "set", "id": set_id}})
    assert agg.status_code == 200
    agg_id = agg.json()["assessment"]["id"]
    assert agg.json()["next"]["step"] == 4

    resp4 = client.post(f"/assessments/{agg_id}/steps/4", json=by_step[4])
    assert resp4.status_code == 200, resp4.text
    assert resp4.json()["assessment"]["verdict"] == "negative"

    resp5 = client.post(f"/assessments/{agg_id}/steps/5", json=by_step[5])
    assert resp5.status_code == 200, resp5.text
    final = resp5.json()["assessment"]
    assert final["category"] == "negative-deviation"
    assert final["action"]["kind"] == "prevent"


def test_step_out_of_order_is_409(client, fixture_bytes):
    mv, lv = upload_fixtures(client, fixture_bytes)
    (dev_id,) = run_conformance(client, mv, lv)["deviations"]
    a_id = client.post("/assessments", json={
        "subject": {"kind": "instance", "id": dev_id}}).json()["assessment"]["id"]
    resp = client.post(f"/assessments/{a_id}/steps/2", json={
        "model_correct": True, "model_suitable": True,
        "deviation_solely_due_to_model": False, "rationale": "x"})
    assert resp.status_code == 409
    assert resp.json()["error"] == "WrongStep"


def test_unknown_ids_are_404(client):
    assert client.get("/assessments/nope/next").status_code == 404
    resp = client.post("/assessments", json={"subject": {"kind": "instance", "id": "ghost"}})
    assert resp.status_code == 404
    assert resp.json()["error"] == "UnknownInstance"


def test_next_never_exposes_later_factors(client, fixture_bytes):
    mv, lv = upload_fixtures(client, fixture_bytes)
    (dev_id,) = run_conformance(client, mv, lv)["deviations"]
    a_id = client.post("/assessments", json={
        "subject": {"kind": "instance", "id": dev_id}}).json()["assessment"]["id"]
    nxt = client.get(f"/assessments/{a_id}/next").json()
    assert nxt["required_factors"] == ["data-quality"]
    assert set(nxt["questions"]) == {"data-quality"}
    resp = client.post(f"/assessments/{a_id}/steps/1", json={
        "data_quality_attributable": True, "rationale": "broken export", "evidence": []})
    nxt = resp.json()["next"]
    assert nxt["state"] == "concluded"
    assert nxt["required_factors"] == []
    assert nxt["category"] == "false-alarm-log"


def test_decision_table_endpoint(client):
    table = client.get("/decision-table").json()
    assert len(table["categories"]) == 7
    assert len(table["factors"]) == 11
    assert len(table["actions"]) == 4
    assert {p["category"] for p in table["paths"]} == set(table["categories"])


def test_report_endpoint_json_and_text(client, fixture_bytes):
    mv, lv = upload_fixtures(client, fixture_bytes)
    run_conformance(client, mv, lv)
    ws_id = "workspace"
    body = client.get(f"/reports/{ws_id}").json()
    assert body["workspace_id"] == ws_id
    text = client.get(f"/reports/{ws_id}", params={"format": "text"}).text
    assert text.startswith("deviation triage report")
    assert client.get("/reports/ghost").status_code == 404


def test_api_state_matches_engine_replay(client, fixture_bytes, tmp_path):
    """The API is a thin adapter: replaying its traffic on the engine directly
    yields the same conclusion."""
    mv, lv = upload_fixtures(client, fixture_bytes)
    (dev_id,) = run_conformance(client, mv, lv)["deviations"]
    a_id = client.post("/assessments", json={
        "subject": {"kind": "instance", "id": dev_id}}).json()["assessment"]["id"]
    wire_answers = [
        {"data_quality_attributable": True, "rationale": "glitch", "evidence": []},
    ]
    api_state = client.post(f"/assessments/{a_id}/steps/1", json=wire_answers[0]).json()["assessment"]

    from devtriage.deviations import DeviationInstance, PatternKind
    from devtriage.engine import TriageEngine, answer_from_dict

    engine = TriageEngine()
    engine.register_instance(DeviationInstance(
        id=dev_id, case_id="inv-0042", pattern=PatternKind.SKIP,
        skipped=("Receive Payment",), inserted=(), context_before="Send Invoice",
        context_after="Clear Invoice",
        sequence_signature=("Receive Order", "Send Invoice", "Clear Invoice")))
    direct = engine.start_individual(dev_id, mv, lv)
    direct = engine.submit(direct.id, answer_from_dict({**wire_answers[0], "step": 1}))
    assert api_state["category"] == direct.category.value
    assert api_state["action"]["kind"] == direct.action.kind.value
    assert api_state["state"] == direct.state.value


def test_static_token_auth(tmp_path, fixture_bytes):
    app = create_app(tmp_path / "ws", token="sesame")
    client = TestClient(app)
    assert client.get("/decision-table").status_code == 401
    ok = client.get("/decision-table", headers={"x-api-token": "sesame"})
    assert ok.status_code == 200


def test_workspace_persists_across_service_restarts(tmp_path, fixture_bytes):
    app = create_app(tmp_path / "ws")
    with TestClient(app) as client:
        mv, lv = upload_fixtures(client, fixture_bytes)
        run_conformance(client, mv, lv)
    app2 = create_app(tmp_path / "ws")
    with TestClient(app2) as client2:
        listing = client2.get("/deviations").json()["deviations"]
        assert len(listing) == 1


def test_sets_default_mode_comes_from_workspace_settings(client, fixture_bytes):
    mv, lv = upload_fixtures(client, fixture_bytes)
    run_conformance(client, mv, lv)
    sets = client.post("/sets", json={}).json()["sets"]
    assert sets[0]["mode"]["kind"] == "same-behavior-same-sequence"
