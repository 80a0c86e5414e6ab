import json
from pathlib import Path

import pytest

from devtriage.deviations import SAME_SEQUENCE, aggregate
from devtriage.engine import (
    ControlStatus,
    ImpactRating,
    IMPACT_FACTORS,
    InputFactor,
    Perspective,
    Step1Answer,
    Step2Answer,
    Step3Answer,
    Step4Answer,
    Step5Answer,
    TriageEngine,
)
from devtriage.errors import IoError, SchemaVersionMismatch, ValidationError
from devtriage.workspace import (
    Workspace,
    build_report,
    conformance_run_key,
    load,
    persist,
    run_conformance,
)
from devtriage.alignment import DEFAULT_COSTS


def populated_workspace(invoice_model, invoice_log) -> Workspace:
    ws = Workspace(id="ws-test")
    mv = ws.add_model(invoice_model)
    lv = ws.add_log(invoice_log)
    run_conformance(ws, mv, lv)
    engine = TriageEngine(ws.deviations, ws.sets, ws.assessments)
    for dset in aggregate(list(ws.deviations.values()), SAME_SEQUENCE):
        ws.add_set(dset)
    (dev_id,) = ws.deviations
    a = engine.start_individual(dev_id, mv, lv)
    a = engine.submit(a.id, Step1Answer(False, rationale="clean"))
    a = engine.submit(a.id, Step2Answer(True, True, False, rationale="fine"))
    a = engine.submit(a.id, Step3Answer(False, ControlStatus.IN_CONTROL, True, rationale="core"))
    (set_id,) = ws.sets
    agg = engine.start_aggregated(set_id)
    ratings = {(f, p): ImpactRating(0) for f in IMPACT_FACTORS for p in Perspective}
    ratings[(InputFactor.COMPLIANCE, Perspective.DIRECT)] = ImpactRating(-2, "policy violated")
    agg = engine.submit(agg.id, Step4Answer(ratings=ratings))
    agg = engine.submit(agg.id, Step5Answer(chosen_reaction="system control",
                                            effectiveness_score=8, cost_score=3,
                                            rationale="cheap to enforce"))
    return ws


def all_file_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*.json"))}


def test_persist_load_roundtrip(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    persist(ws, tmp_path / "ws")
    again = load(tmp_path / "ws")
    assert again.id == ws.id
    assert again.models == ws.models
    assert again.logs == ws.logs
    assert again.alignments == ws.alignments
    assert again.deviations == ws.deviations
    assert again.sets == ws.sets
    assert again.assessments == ws.assessments
    assert again.settings == ws.settings


def test_persist_is_byte_stable(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    persist(ws, tmp_path / "a")
    persist(load(tmp_path / "a"), tmp_path / "b")
    assert all_file_bytes(tmp_path / "a") == all_file_bytes(tmp_path / "b")


def test_content_addressed_versions_idempotent(invoice_model, invoice_log):
    ws = Workspace()
    v1 = ws.add_model(invoice_model)
    v2 = ws.add_model(invoice_model)
    assert v1 == v2
    assert len(ws.models) == 1
    l1, l2 = ws.add_log(invoice_log), ws.add_log(invoice_log)
    assert l1 == l2


def test_run_key_depends_on_versions(invoice_model, invoice_log):
    k1 = conformance_run_key("m-1", "l-1", DEFAULT_COSTS)
    k2 = conformance_run_key("m-2", "l-1", DEFAULT_COSTS)
    assert k1 != k2
    assert k1 == conformance_run_key("m-1", "l-1", DEFAULT_COSTS)


def test_tampered_enum_rejected(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    root = persist(ws, tmp_path / "ws")
    (dev_file,) = (root / "deviations").glob("*.json")
    doc = json.loads(dev_file.read_text())
    doc["pattern"] = "not-a-pattern"
    dev_file.write_text(json.dumps(doc))
    with pytest.raises(ValidationError):
        load(root)


def test_tampered_schema_marker_rejected(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    root = persist(ws, tmp_path / "ws")
    manifest = json.loads((root / "workspace.json").read_text())
    manifest["schema"] = "workspace@99"
    (root / "workspace.json").write_text(json.dumps(manifest))
    with pytest.raises(SchemaVersionMismatch):
        load(root)


def test_load_missing_directory(tmp_path):
    with pytest.raises(IoError):
        load(tmp_path / "nope")


def test_concurrent_loads_identical(tmp_path, invoice_model, invoice_log):
    import concurrent.futures

    ws = populated_workspace(invoice_model, invoice_log)
    persist(ws, tmp_path / "ws")
    with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda _: load(tmp_path / "ws"), range(8)))
    first = results[0]
    for other in results[1:]:
        assert other.assessments == first.assessments
        assert other.deviations == first.deviations


def test_persist_prunes_stale_documents(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    root = persist(ws, tmp_path / "ws")
    stale = root / "deviations" / "stale.json"
    stale.write_text("{}")
    persist(ws, root)
    assert not stale.exists()


def test_report_counts_match_concluded(invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    report = build_report(ws)
    concluded = sum(report.category_counts.values())
    assert concluded == report.snapshot["concluded_assessments"] == 1
    assert report.category_counts == {"negative-deviation": 1}
    (row,) = report.set_rows
    assert row.category == "negative-deviation"
    assert row.action == "prevent"
    assert row.frequency == 1
    assert row.chosen_reaction == "system control"
    assert any("policy violated" in r for r in row.rationales)


def test_run_conformance_unknown_versions(invoice_model):
    ws = Workspace()
    mv = ws.add_model(invoice_model)
    with pytest.raises(ValidationError):
        run_conformance(ws, mv, "l-ghost")
    with pytest.raises(ValidationError):
        run_conformance(ws, "m-ghost", "l-ghost")


def test_dangling_cross_reference_rejected_on_load(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    root = persist(ws, tmp_path / "ws")
    (dev_file,) = (root / "deviations").glob("*.json")
    dev_file.unlink()
    manifest = json.loads((root / "workspace.json").read_text())
    manifest["refs"]["deviations"] = []
    (root / "workspace.json").write_text(json.dumps(manifest))
    with pytest.raises(ValidationError):
        load(root)


def test_ids_with_odd_characters_do_not_collide_on_disk(tmp_path, invoice_model):
    from devtriage.deviations import DeviationInstance, PatternKind

    ws = Workspace()
    for case in ("a/b", "a_b"):
        ws.add_deviation(DeviationInstance(
            id=f"{case}-d0", case_id=case, pattern=PatternKind.SKIP,
            skipped=("X",), inserted=(), context_before=None, context_after=None,
            sequence_signature=("Y",)))
    persist(ws, tmp_path / "ws")
    again = load(tmp_path / "ws")
    assert again.deviations == ws.deviations
    assert len(list((tmp_path / "ws" / "deviations").glob("*.json"))) == 2
