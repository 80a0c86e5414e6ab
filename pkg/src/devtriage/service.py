"""HTTP adapter over the triage engine.

The API holds no categorization logic of its own: every transition is the
engine's transition for the same inputs, and responses are the canonical
wire documents. Errors map onto status codes by type — 404 for unknown
ids, 409 for out-of-order steps, 400 for everything validation-shaped.
Writes per assessment are serialized by the engine; the workspace is
persisted after each mutating request when a path is configured.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from . import engine as eng
from .alignment import DEFAULT_COSTS, cost_function_from_dict
from .deviations import (
    AggregationKind,
    AggregationMode,
    aggregate,
    instance_to_dict,
    mode_from_dict,
    set_to_dict,
)
from .errors import (
    MalformedInput,
    TriageError,
    UnknownAssessment,
    UnknownInstance,
    UnknownSet,
    ValidationError,
    WrongStep,
)
from .eventlog import ColumnMapping, parse_csv, parse_xes
from .petri import parse_pnml
from .reporting import render_text
from .workspace import Workspace, build_report, load, persist, run_conformance

MODE_ALIASES = {
    "same-seq": AggregationKind.SAME_BEHAVIOR_SAME_SEQUENCE,
    "same-any": AggregationKind.SAME_BEHAVIOR_ANY_SEQUENCE,
    "similar": AggregationKind.SIMILAR_BEHAVIOR,
}

_STATUS_FOR = [
    ((UnknownInstance, UnknownSet, UnknownAssessment), 404),
    ((WrongStep,), 409),
]


def load_questions(path: str | Path | None = None) -> dict[str, str]:
    """Factor prompts shown to the analyst; shipped as an editable data file."""
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = resources.files("devtriage").joinpath("fixtures/questions.json").read_text("utf-8")
    questions = json.loads(raw)
    missing = [f.value for f in eng.InputFactor if f.value not in questions]
    if missing:
        raise ValidationError(f"questions file lacks prompts for: {missing}")
    return questions


def _status_for(exc: TriageError) -> int:
    for types, status in _STATUS_FOR:
        if isinstance(exc, types):
            return status
    return 400


def _mode_from_request(doc: Mapping, default: AggregationMode) -> AggregationMode:
    if "mode" not in doc:
        return default
    raw_mode = doc["mode"]
    if isinstance(raw_mode, str):
        if raw_mode not in MODE_ALIASES and raw_mode not in {k.value for k in AggregationKind}:
            raise ValidationError(f"unknown aggregation mode {raw_mode!r}")
        kind = MODE_ALIASES.get(raw_mode) or AggregationKind(raw_mode)
        return AggregationMode(
            kind,
            doc.get("normalization", {}) if kind is AggregationKind.SIMILAR_BEHAVIOR else {},
            bool(doc.get("strict", False)),
        )
    return mode_from_dict(raw_mode)


def _next_descriptor(assessment: eng.Assessment, questions: Mapping[str, str]) -> dict:
    factors = eng.required_factors(assessment)
    return {
        "assessment_id": assessment.id,
        "state": assessment.state.value,
        "step": assessment.current_step(),
        "required_factors": [f.value for f in factors],
        "questions": {f.value: questions[f.value] for f in factors},
        "category": assessment.category.value if assessment.category else None,
        "action": (
            {"kind": assessment.action.kind.value, "followups": list(assessment.action.followups)}
            if assessment.action else None
        ),
    }


def create_app(
    workspace_path: str | Path | None = None,
    *,
    token: str | None = None,
    questions_path: str | Path | None = None,
) -> FastAPI:
    if workspace_path is not None and Path(workspace_path, "workspace.json").exists():
        workspace = load(workspace_path)
    else:
        workspace = Workspace()
    engine = eng.TriageEngine(workspace.deviations, workspace.sets, workspace.assessments)
    questions = load_questions(questions_path)
    app = FastAPI(title="devtriage", version="0.1.0")
    app.state.workspace = workspace
    app.state.engine = engine

    def save() -> None:
        if workspace_path is not None:
            persist(workspace, workspace_path)

    @app.exception_handler(TriageError)
    async def triage_error_handler(request: Request, exc: TriageError) -> JSONResponse:
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if token is not None and request.headers.get("x-api-token") != token:
            return JSONResponse(status_code=401, content={"error": "Unauthorized",
                                                          "detail": "missing or wrong x-api-token"})
        return await call_next(request)

    @app.post("/models")
    async def post_model(request: Request) -> dict:
        body = await request.body()
        model = parse_pnml(body)
        version = workspace.add_model(model)
        save()
        return {"version": version, "id": model.id,
                "transitions": len(model.transitions), "places": len(model.places)}

    @app.post("/logs")
    async def post_log(request: Request) -> dict:
        body = await request.body()
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            try:
                doc = json.loads(body)
            except json.JSONDecodeError as exc:
                raise MalformedInput(f"body is not JSON: {exc}") from exc
            fmt = doc.get("format", "csv")
            content = doc.get("content", "").encode("utf-8")
            if fmt == "csv":
                mapping_doc = doc.get("mapping", {})
                mapping = ColumnMapping(
                    case=mapping_doc.get("case", "case"),
                    activity=mapping_doc.get("activity", "activity"),
                    timestamp=mapping_doc.get("timestamp"),
                    context=mapping_doc.get("context"),
                    delimiter=mapping_doc.get("delimiter", ","),
                )
                log = parse_csv(content, mapping)
            elif fmt == "xes":
                log = parse_xes(content)
            else:
                raise ValidationError(f"unknown log format {fmt!r}")
        else:
            log = parse_xes(body)
        version = workspace.add_log(log)
        save()
        return {"version": version, "traces": len(log.traces),
                "quality_flags": len(log.quality_flags)}

    @app.post("/conformance/run")
    async def post_conformance(request: Request) -> dict:
        doc = await request.json()
        cost = cost_function_from_dict(doc.get("cost", {})) if doc.get("cost") else DEFAULT_COSTS
        alignment_ids, deviation_ids = run_conformance(
            workspace, doc.get("model", ""), doc.get("log", ""), cost
        )
        save()
        return {"alignments": alignment_ids, "deviations": deviation_ids}

    @app.get("/deviations")
    async def get_deviations() -> dict:
        return {"deviations": [instance_to_dict(workspace.deviations[k])
                               for k in sorted(workspace.deviations)]}

    @app.post("/sets")
    async def post_sets(request: Request) -> dict:
        doc = await request.json()
        mode = _mode_from_request(doc, workspace.settings.default_mode)
        instances = [workspace.deviations[k] for k in sorted(workspace.deviations)]
        sets = aggregate(instances, mode)
        for dset in sets:
            workspace.add_set(dset)
        save()
        return {"sets": [set_to_dict(s) for s in sets]}

    @app.post("/assessments")
    async def post_assessment(request: Request) -> dict:
        doc = await request.json()
        subject = doc.get("subject", {})
        kind, subject_id = subject.get("kind"), subject.get("id", "")
        if kind == "instance":
            assessment = engine.start_individual(
                subject_id, doc.get("model_version", ""), doc.get("log_version", ""),
                actor=doc.get("actor", "analyst"),
            )
        elif kind == "set":
            assessment = engine.start_aggregated(subject_id, actor=doc.get("actor", "analyst"))
        else:
            raise ValidationError(f"subject kind must be 'instance' or 'set', got {kind!r}")
        save()
        return {"assessment": eng.assessment_to_dict(assessment),
                "next": _next_descriptor(assessment, questions)}

    @app.get("/assessments/{assessment_id}")
    async def get_assessment(assessment_id: str) -> dict:
        return {"assessment": eng.assessment_to_dict(engine.get(assessment_id))}

    @app.get("/assessments/{assessment_id}/next")
    async def get_next(assessment_id: str) -> dict:
        return _next_descriptor(engine.get(assessment_id), questions)

    @app.post("/assessments/{assessment_id}/steps/{step}")
    async def post_step(assessment_id: str, step: int, request: Request) -> dict:
        doc = await request.json()
        if "step" in doc and doc["step"] != step:
            raise ValidationError(f"body step {doc['step']} contradicts URL step {step}")
        answer = eng.answer_from_dict({**doc, "step": step})
        if isinstance(answer, eng.Step5Answer) and answer.scale is not None:
            if answer.scale != workspace.settings.impact_scale:
                raise ValidationError(
                    f"score scale {answer.scale!r} does not match configured "
                    f"{workspace.settings.impact_scale!r}"
                )
        assessment = engine.submit(assessment_id, answer, actor=doc.get("actor", "analyst"))
        save()
        return {"assessment": eng.assessment_to_dict(assessment),
                "next": _next_descriptor(assessment, questions)}

    @app.get("/decision-table")
    async def get_decision_table() -> dict:
        return eng.decision_table_to_dict()

    @app.get("/reports/{workspace_id}")
    async def get_report(workspace_id: str, format: str = "json") -> Response:
        if workspace_id != workspace.id:
            return JSONResponse(status_code=404,
                                content={"error": "UnknownWorkspace",
                                         "detail": f"no workspace {workspace_id!r}"})
        report = build_report(workspace)
        if format == "text":
            return PlainTextResponse(render_text(report))
        return JSONResponse(report.to_dict())

    return app
