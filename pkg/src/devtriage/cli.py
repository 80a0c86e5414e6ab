"""Command-line interface: check, aggregate, assess, decision-table, report, serve.

Exit codes: 0 ok, 2 validation problem, 3 I/O problem, 4 engine state
(e.g. answers out of step order). Data output is byte-stable across runs;
journal timestamps only appear with --journal.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine as eng
from .alignment import DEFAULT_COSTS, alignment_to_dict, cost_function_from_dict
from .deviations import (
    AggregationKind,
    AggregationMode,
    aggregate,
    instance_to_dict,
    instances_from_json,
    set_from_dict,
    set_to_dict,
)
from .errors import (
    IoError,
    MemberKnockedOut,
    MembersNotScreened,
    TriageError,
    UnknownAssessment,
    UnknownInstance,
    UnknownSet,
    ValidationError,
    WrongStep,
)
from .eventlog import ColumnMapping, EventLog, parse_csv, parse_xes
from .petri import parse_pnml
from .reporting import render_text, write_report_files
from .workspace import (
    Workspace,
    build_report,
    conformance_run_key,
    load,
    persist,
    run_conformance,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_ENGINE_STATE = 4

_ENGINE_STATE_ERRORS = (WrongStep, MembersNotScreened, MemberKnockedOut,
                        UnknownInstance, UnknownSet, UnknownAssessment)

MODE_BY_NAME = {
    "same-seq": AggregationKind.SAME_BEHAVIOR_SAME_SEQUENCE,
    "same-any": AggregationKind.SAME_BEHAVIOR_ANY_SEQUENCE,
    "similar": AggregationKind.SIMILAR_BEHAVIOR,
}


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _read_json(path: str):
    raw = _read_bytes(path)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not JSON: {exc}") from exc


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_workspace(path: str) -> Workspace:
    if Path(path, "workspace.json").exists():
        return load(path)
    return Workspace()


def _parse_log_arg(args) -> EventLog:
    data = _read_bytes(args.log)
    if args.format == "csv" or (args.format == "auto" and args.log.endswith(".csv")):
        mapping = ColumnMapping(
            case=args.csv_case,
            activity=args.csv_activity,
            timestamp=args.csv_timestamp,
            context=args.csv_context,
            delimiter=args.csv_delimiter,
        )
        return parse_csv(data, mapping)
    return parse_xes(data)


def cmd_check(args) -> int:
    model_bytes = _read_bytes(args.model)
    sidecar = _read_bytes(args.final_marking) if args.final_marking else None
    model = parse_pnml(model_bytes, sidecar)
    log = _parse_log_arg(args)
    cost = cost_function_from_dict(_read_json(args.cost)) if args.cost else DEFAULT_COSTS

    workspace = _load_workspace(args.workspace) if args.workspace else Workspace()
    model_version = workspace.add_model(model)
    log_version = workspace.add_log(log)
    alignment_ids, deviation_ids = run_conformance(workspace, model_version, log_version, cost)
    if args.workspace:
        persist(workspace, args.workspace)

    payload = {
        "model_version": model_version,
        "log_version": log_version,
        "run_key": conformance_run_key(model_version, log_version, cost),
        "alignments": [alignment_to_dict(workspace.alignments[a]) for a in alignment_ids],
        "deviations": [instance_to_dict(workspace.deviations[d]) for d in deviation_ids],
    }
    _emit(payload, args.out)
    return EXIT_OK


def _mode_from_args(args) -> AggregationMode:
    kind = MODE_BY_NAME[args.mode]
    normalization = {}
    if args.normalization:
        normalization = _read_json(args.normalization)
        if not isinstance(normalization, dict):
            raise ValidationError("normalization file must be a JSON object")
    if normalization and kind is not AggregationKind.SIMILAR_BEHAVIOR:
        raise ValidationError("--normalization requires --mode similar")
    return AggregationMode(kind, normalization, strict=args.strict)


def cmd_aggregate(args) -> int:
    mode = _mode_from_args(args)
    if args.workspace:
        workspace = _load_workspace(args.workspace)
        instances = [workspace.deviations[k] for k in sorted(workspace.deviations)]
    elif args.deviations:
        workspace = None
        instances = instances_from_json(_read_bytes(args.deviations))
    else:
        raise ValidationError("aggregate needs --workspace or --deviations")
    sets = aggregate(instances, mode)
    if workspace is not None:
        for dset in sets:
            workspace.add_set(dset)
        persist(workspace, args.workspace)
    _emit({"sets": [set_to_dict(s) for s in sets]}, args.out)
    return EXIT_OK


def _resolve_answers(path: str) -> list:
    docs = _read_json(path)
    if not isinstance(docs, list):
        raise ValidationError("answers file must be a JSON list of step answers")
    return [eng.answer_from_dict(d) for d in docs]


def cmd_assess(args) -> int:
    answers = _resolve_answers(args.answers)
    if args.workspace:
        workspace = _load_workspace(args.workspace)
    elif args.deviations:
        workspace = Workspace()
        for inst in instances_from_json(_read_bytes(args.deviations)):
            workspace.add_deviation(inst)
        if args.sets:
            sets_doc = _read_json(args.sets)
            for doc in sets_doc.get("sets", sets_doc) if isinstance(sets_doc, dict) else sets_doc:
                workspace.add_set(set_from_dict(doc))
    else:
        raise ValidationError("assess needs --workspace or --deviations")

    for answer in answers:
        if isinstance(answer, eng.Step5Answer) and answer.scale is not None:
            if answer.scale != workspace.settings.impact_scale:
                raise ValidationError(
                    f"score scale {answer.scale!r} does not match configured "
                    f"{workspace.settings.impact_scale!r}"
                )

    engine = eng.TriageEngine(workspace.deviations, workspace.sets, workspace.assessments)
    actor = args.analyst

    if args.subject in workspace.sets:
        screening = [a for a in answers if a.step <= 3]
        judging = [a for a in answers if a.step >= 4]
        if screening:
            needs_screening = any(
                engine.individual_outcome(m) is None
                for m in workspace.sets[args.subject].members
            )
            if needs_screening and not args.confirm_fast_path:
                raise ValidationError(
                    "answers contain steps 1-3 for a set subject; pass --confirm-fast-path "
                    "to apply them to every member"
                )
            if needs_screening:
                engine.screen_set_fast_path(args.subject, screening, confirmed_by=actor)
        assessment = engine.start_aggregated(args.subject, actor=actor)
        for answer in judging:
            assessment = engine.submit(assessment.id, answer, actor=actor)
    elif args.subject in workspace.deviations:
        assessment = engine.start_individual(
            args.subject, args.model_version, args.log_version, actor=actor)
        for answer in answers:
            assessment = engine.submit(assessment.id, answer, actor=actor)
    else:
        raise UnknownInstance(f"subject {args.subject!r} is neither a known set nor instance")

    if args.workspace:
        persist(workspace, args.workspace)

    if assessment.state is eng.AssessmentState.CONCLUDED:
        print(f"{assessment.category.value} / {assessment.action.kind.value}")
        for followup in assessment.action.followups:
            print(f"followup: {followup}")
    elif assessment.state is eng.AssessmentState.TRUE_DEVIATION_PENDING:
        print("true-deviation (eligible for aggregation)")
    else:
        print(f"in progress: {assessment.state.value}")
    if args.journal:
        for entry in assessment.journal:
            print(f"journal {entry.timestamp} [{entry.actor}] {entry.event}")
    return EXIT_OK


def cmd_decision_table(args) -> int:
    table = eng.decision_table_to_dict()
    if args.json:
        _emit(table, args.out)
        return EXIT_OK
    lines = []
    for path in table["paths"]:
        lines.append(f"{path['id']}: {path['category']} / {path['action']}")
        for condition in path["conditions"]:
            lines.append(f"  - {condition}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    workspace = load(args.workspace)
    report = build_report(workspace)
    sys.stdout.write(render_text(report))
    if args.out:
        written = write_report_files(report, args.out, figures=not args.no_figures)
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.workspace, token=args.token, questions_path=args.questions)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="devtriage",
                                     description="deviation detection and desirability triage")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="align a log against a model and extract deviations")
    p.add_argument("--model", required=True, help="PNML file")
    p.add_argument("--final-marking", help="sidecar JSON with the final marking")
    p.add_argument("--log", required=True, help="XES or CSV file")
    p.add_argument("--format", choices=["auto", "xes", "csv"], default="auto")
    p.add_argument("--csv-case", default="case")
    p.add_argument("--csv-activity", default="activity")
    p.add_argument("--csv-timestamp", default=None)
    p.add_argument("--csv-context", default=None)
    p.add_argument("--csv-delimiter", default=",")
    p.add_argument("--cost", help="JSON cost function file")
    p.add_argument("--workspace", help="persist results into this workspace directory")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("aggregate", help="group deviations into sets")
    p.add_argument("--mode", choices=sorted(MODE_BY_NAME), required=True)
    p.add_argument("--normalization", help="JSON activity->class map (similar mode)")
    p.add_argument("--strict", action="store_true",
                   help="fail on activities missing from the normalization map")
    p.add_argument("--workspace")
    p.add_argument("--deviations", help="deviations JSON list (import)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("assess", help="replay step answers against a subject")
    p.add_argument("--subject", required=True, help="deviation instance id or set id")
    p.add_argument("--answers", required=True, help="JSON list of step answers")
    p.add_argument("--workspace")
    p.add_argument("--deviations", help="deviations JSON list (no workspace)")
    p.add_argument("--sets", help="sets JSON (no workspace)")
    p.add_argument("--analyst", default="analyst")
    p.add_argument("--confirm-fast-path", action="store_true",
                   help="apply shared step 1-3 answers to every member of a set")
    p.add_argument("--model-version", default="")
    p.add_argument("--log-version", default="")
    p.add_argument("--journal", action="store_true", help="print the journal (timestamps)")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("decision-table", help="print all category paths")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decision_table)

    p = sub.add_parser("report", help="render a workspace report")
    p.add_argument("--workspace", required=True)
    p.add_argument("--out", help="directory for report.json/.txt/.csv and figures")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--workspace")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", help="require this x-api-token header")
    p.add_argument("--questions", help="override the factor prompts file")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ENGINE_STATE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE_STATE
    except IoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TriageError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
