"""File-backed workspace: versioned stores plus report assembly.

A workspace is a directory of JSON documents, one per entity, plus a root
manifest. Models and logs are content-addressed: the version id is a digest
of the canonical document, so re-uploading identical content is idempotent
and versions are immutable once written. Writes are atomic (write to a
temp file, then rename). No database: documents stay diff-able and the
assessment journals stay auditable as plain text.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ._canon import canonical_json, content_id
from .alignment import (
    DEFAULT_COSTS,
    DEFAULT_STATE_BUDGET,
    Alignment,
    CostFunction,
    align,
    alignment_from_dict,
    alignment_to_dict,
    cost_function_to_dict,
    extract_deviations,
)
from .deviations import (
    AggregationMode,
    DeviationInstance,
    DeviationSet,
    SAME_SEQUENCE,
    instance_from_dict,
    instance_to_dict,
    mode_from_dict,
    mode_to_dict,
    set_from_dict,
    set_to_dict,
)
from .engine import (
    Assessment,
    AssessmentState,
    OutputCategory,
    Step5Answer,
    SubjectKind,
    answer_to_dict,
    assessment_from_dict,
    assessment_to_dict,
)
from .errors import IoError, SchemaVersionMismatch, ValidationError
from .eventlog import EventLog, log_from_dict, log_to_dict
from .petri import ProcessModel, model_from_dict, model_to_dict

WORKSPACE_SCHEMA = "workspace@1"


@dataclass(frozen=True)
class WorkspaceSettings:
    default_mode: AggregationMode = SAME_SEQUENCE
    impact_scale: str = "score"  # one declared scale per organization: score or currency

    def to_dict(self) -> dict:
        return {"default_mode": mode_to_dict(self.default_mode), "impact_scale": self.impact_scale}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "WorkspaceSettings":
        return cls(
            default_mode=mode_from_dict(doc["default_mode"]),
            impact_scale=str(doc.get("impact_scale", "score")),
        )


@dataclass
class Workspace:
    id: str = "workspace"
    models: dict[str, ProcessModel] = field(default_factory=dict)
    logs: dict[str, EventLog] = field(default_factory=dict)
    alignments: dict[str, Alignment] = field(default_factory=dict)
    deviations: dict[str, DeviationInstance] = field(default_factory=dict)
    sets: dict[str, DeviationSet] = field(default_factory=dict)
    assessments: dict[str, Assessment] = field(default_factory=dict)
    settings: WorkspaceSettings = field(default_factory=WorkspaceSettings)

    def add_model(self, model: ProcessModel) -> str:
        """Store a model under its content id; identical content, identical id."""
        vid = content_id(model_to_dict(model), "m-")
        self.models[vid] = model
        return vid

    def add_log(self, log: EventLog) -> str:
        vid = content_id(log_to_dict(log), "l-")
        self.logs[vid] = log
        return vid

    def add_alignment(self, alignment: Alignment, run_key: str) -> str:
        aid = f"aln-{run_key}-{alignment.case_id}"
        self.alignments[aid] = alignment
        return aid

    def add_deviation(self, instance: DeviationInstance) -> str:
        self.deviations[instance.id] = instance
        return instance.id

    def add_set(self, dset: DeviationSet) -> str:
        self.sets[dset.id] = dset
        return dset.id


def conformance_run_key(model_version: str, log_version: str, cost: CostFunction) -> str:
    """Short digest naming one (model, log, cost) conformance run.

    Prefixing deviation ids with it keeps them deterministic across re-runs
    yet distinct between runs against different model or log versions.
    """
    payload = {"model": model_version, "log": log_version, "cost": cost_function_to_dict(cost)}
    return content_id(payload, "", digits=8)


def run_conformance(
    workspace: Workspace,
    model_version: str,
    log_version: str,
    cost: CostFunction = DEFAULT_COSTS,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
) -> tuple[list[str], list[str]]:
    """Align every trace of the log against the model; store the results.

    Returns (alignment ids, deviation ids) in trace order.
    """
    if model_version not in workspace.models:
        raise ValidationError(f"unknown model version {model_version!r}")
    if log_version not in workspace.logs:
        raise ValidationError(f"unknown log version {log_version!r}")
    model = workspace.models[model_version]
    log = workspace.logs[log_version]
    run_key = conformance_run_key(model_version, log_version, cost)
    alignment_ids: list[str] = []
    deviation_ids: list[str] = []
    for trace in log.traces:
        alignment = align(trace, model, cost, state_budget=state_budget)
        alignment_ids.append(workspace.add_alignment(alignment, run_key))
        for instance in extract_deviations(alignment, id_prefix=f"{run_key}:"):
            deviation_ids.append(workspace.add_deviation(instance))
    return alignment_ids, deviation_ids


_SUBDIRS = ("models", "logs", "alignments", "deviations", "sets", "assessments")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _doc_text(doc: Mapping) -> str:
    return canonical_json(doc) + "\n"


def persist(workspace: Workspace, path: str | Path) -> Path:
    """Write the workspace as a directory of canonical JSON documents."""
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
        manifest = {
            "schema": WORKSPACE_SCHEMA,
            "id": workspace.id,
            "settings": workspace.settings.to_dict(),
            "refs": {
                "models": sorted(workspace.models),
                "logs": sorted(workspace.logs),
                "alignments": sorted(workspace.alignments),
                "deviations": sorted(workspace.deviations),
                "sets": sorted(workspace.sets),
                "assessments": sorted(workspace.assessments),
            },
        }
        _write_atomic(root / "workspace.json", _doc_text(manifest))
        stores = {
            "models": (workspace.models, model_to_dict),
            "logs": (workspace.logs, log_to_dict),
            "alignments": (workspace.alignments, alignment_to_dict),
            "deviations": (workspace.deviations, instance_to_dict),
            "sets": (workspace.sets, set_to_dict),
            "assessments": (workspace.assessments, assessment_to_dict),
        }
        for sub, (store, encode) in stores.items():
            for key, entity in store.items():
                _write_atomic(root / sub / f"{_safe_name(key)}.json", _doc_text(encode(entity)))
        # drop stale documents so the directory mirrors the workspace exactly
        for sub, (store, _) in stores.items():
            directory = root / sub
            if not directory.is_dir():
                continue
            keep = {f"{_safe_name(k)}.json" for k in store}
            for entry in directory.iterdir():
                if entry.name.endswith(".json") and entry.name not in keep:
                    entry.unlink()
    except OSError as exc:
        raise IoError(f"cannot persist workspace to {root}: {exc}") from exc
    return root


def _safe_name(key: str) -> str:
    cleaned = "".join(c if c.isalnum() or c in "-._" else "_" for c in key)
    if cleaned != key:
        # sanitization may collide distinct ids; a digest keeps names unique
        cleaned += "-" + hashlib.sha256(key.encode("utf-8")).hexdigest()[:8]
    return cleaned


def load(path: str | Path) -> Workspace:
    root = Path(path)
    manifest_path = root / "workspace.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{manifest_path} is not JSON: {exc}") from exc
    if manifest.get("schema") != WORKSPACE_SCHEMA:
        raise SchemaVersionMismatch(
            f"expected {WORKSPACE_SCHEMA}, got {manifest.get('schema')!r}"
        )
    workspace = Workspace(
        id=str(manifest["id"]),
        settings=WorkspaceSettings.from_dict(manifest.get("settings", {})),
    )
    decoders = {
        "models": (workspace.models, model_from_dict),
        "logs": (workspace.logs, log_from_dict),
        "alignments": (workspace.alignments, alignment_from_dict),
        "deviations": (workspace.deviations, instance_from_dict),
        "sets": (workspace.sets, set_from_dict),
        "assessments": (workspace.assessments, assessment_from_dict),
    }
    refs = manifest.get("refs", {})
    for sub, (store, decode) in decoders.items():
        for key in refs.get(sub, []):
            doc_path = root / sub / f"{_safe_name(key)}.json"
            try:
                doc = json.loads(doc_path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise IoError(f"cannot read {doc_path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{doc_path} is not JSON: {exc}") from exc
            store[key] = decode(doc)
    _check_cross_references(workspace)
    return workspace


def _check_cross_references(workspace: Workspace) -> None:
    for dset in workspace.sets.values():
        missing = [m for m in dset.members if m not in workspace.deviations]
        if missing:
            raise ValidationError(f"set {dset.id} references unknown deviations: {missing}")
    for assessment in workspace.assessments.values():
        if assessment.subject_kind is SubjectKind.INSTANCE:
            known = assessment.subject_id in workspace.deviations
        else:
            known = assessment.subject_id in workspace.sets
        if not known:
            raise ValidationError(
                f"assessment {assessment.id} references unknown "
                f"{assessment.subject_kind.value} {assessment.subject_id!r}"
            )


# --- report -----------------------------------------------------------------------

@dataclass(frozen=True)
class SetReportRow:
    set_id: str
    frequency: int
    sample_cases: tuple[str, ...]
    category: str | None
    action: str | None
    answers: tuple[dict, ...]
    rationales: tuple[str, ...]
    chosen_reaction: str | None


@dataclass(frozen=True)
class Report:
    workspace_id: str
    snapshot: Mapping[str, int]
    category_counts: Mapping[str, int]
    set_rows: tuple[SetReportRow, ...]

    def to_dict(self) -> dict:
        return {
            "schema": "report@1",
            "workspace_id": self.workspace_id,
            "snapshot": dict(self.snapshot),
            "category_counts": dict(self.category_counts),
            "sets": [
                {
                    "set_id": r.set_id,
                    "frequency": r.frequency,
                    "sample_cases": list(r.sample_cases),
                    "category": r.category,
                    "action": r.action,
                    "answers": list(r.answers),
                    "rationales": list(r.rationales),
                    "chosen_reaction": r.chosen_reaction,
                }
                for r in self.set_rows
            ],
        }


def _answer_rationales(assessment: Assessment) -> tuple[str, ...]:
    out = []
    for answer in assessment.answers:
        rationale = getattr(answer, "rationale", "")
        if rationale:
            out.append(f"step {answer.step}: {rationale}")
        if answer.step == 4:
            for (factor, perspective), rating in sorted(
                answer.ratings.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
            ):
                if rating.note:
                    out.append(f"step 4 [{factor.value}/{perspective.value}]: {rating.note}")
            if answer.override is not None:
                out.append(f"step 4 override: {answer.override.justification}")
    return tuple(out)


def build_report(workspace: Workspace) -> Report:
    """Assemble the analyst-facing report from a workspace snapshot."""
    concluded = [a for a in workspace.assessments.values()
                 if a.state is AssessmentState.CONCLUDED]
    category_counts = {c.value: 0 for c in OutputCategory}
    for a in concluded:
        category_counts[a.category.value] += 1
    category_counts = {k: v for k, v in category_counts.items() if v}

    latest_for_set: dict[str, Assessment] = {}
    for a in workspace.assessments.values():
        if a.subject_kind is SubjectKind.SET:
            current = latest_for_set.get(a.subject_id)
            if current is None or a.id > current.id:
                latest_for_set[a.subject_id] = a

    rows = []
    for set_id in sorted(workspace.sets):
        dset = workspace.sets[set_id]
        assessment = latest_for_set.get(set_id)
        chosen_reaction = None
        if assessment is not None:
            for answer in assessment.answers:
                if isinstance(answer, Step5Answer):
                    chosen_reaction = answer.chosen_reaction
        rows.append(SetReportRow(
            set_id=set_id,
            frequency=dset.frequency,
            sample_cases=dset.sample_cases,
            category=assessment.category.value if assessment and assessment.category else None,
            action=assessment.action.kind.value if assessment and assessment.action else None,
            answers=tuple(answer_to_dict(a) for a in assessment.answers) if assessment else (),
            rationales=_answer_rationales(assessment) if assessment else (),
            chosen_reaction=chosen_reaction,
        ))

    snapshot = {
        "models": len(workspace.models),
        "logs": len(workspace.logs),
        "alignments": len(workspace.alignments),
        "deviations": len(workspace.deviations),
        "sets": len(workspace.sets),
        "assessments": len(workspace.assessments),
        "concluded_assessments": len(concluded),
    }
    return Report(workspace.id, snapshot, category_counts, tuple(rows))
