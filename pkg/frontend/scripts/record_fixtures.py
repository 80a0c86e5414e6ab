"""Record real API traffic for the frontend's replay tests.

Drives the bundled invoice walkthrough against an in-process service and
dumps every exchange (method, path, request, status, response) in order to
tests/fixtures/walkthrough.json. Re-run after changing the API or fixtures:

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from fastapi.testclient import TestClient

from devtriage.service import create_app

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "walkthrough.json"


def main() -> None:
    client = TestClient(create_app())
    exchanges: list[dict] = []

    def record(method: str, path: str, *, body: dict | None = None,
               content: bytes | None = None, headers: dict | None = None):
        if content is not None:
            resp = client.request(method, path, content=content, headers=headers or {})
        elif body is not None:
            resp = client.request(method, path, json=body)
        else:
            resp = client.request(method, path)
        exchanges.append({
            "method": method,
            "path": path,
            "request": body,
            "status": resp.status_code,
            "response": resp.json(),
        })
        return resp.json()

    fixtures = resources.files("devtriage")
    pnml = fixtures.joinpath("fixtures/invoice_to_cash.pnml").read_bytes()
    xes = fixtures.joinpath("fixtures/invoice_to_cash.xes").read_bytes()
    answers = json.loads(fixtures.joinpath("fixtures/answers_invoice_to_cash.json").read_text("utf-8"))
    by_step = {a["step"]: a for a in answers}

    model = record("POST", "/models", content=pnml, headers={"content-type": "application/xml"})
    log = record("POST", "/logs", content=xes, headers={"content-type": "application/xml"})
    run = record("POST", "/conformance/run", body={"model": model["version"], "log": log["version"]})
    record("GET", "/deviations")
    (dev_id,) = run["deviations"]

    started = record("POST", "/assessments",
                     body={"subject": {"kind": "instance", "id": dev_id},
                           "model_version": model["version"], "log_version": log["version"]})
    a_id = started["assessment"]["id"]
    # an out-of-order submission, so the UI tests can replay a 409
    record("POST", f"/assessments/{a_id}/steps/2", body=by_step[2])
    for step in (1, 2, 3):
        record("POST", f"/assessments/{a_id}/steps/{step}", body=by_step[step])

    sets = record("POST", "/sets", body={"mode": "same-seq"})
    set_id = sets["sets"][0]["id"]
    agg = record("POST", "/assessments", body={"subject": {"kind": "set", "id": set_id}})
    agg_id = agg["assessment"]["id"]
    for step in (4, 5):
        record("POST", f"/assessments/{agg_id}/steps/{step}", body=by_step[step])

    record("GET", "/decision-table")
    record("GET", "/reports/workspace")

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"exchanges": exchanges}, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"recorded {len(exchanges)} exchanges -> {OUT}")


if __name__ == "__main__":
    main()
