"""Event logs: XES/CSV parsing and data-quality heuristics.

The XES subset reads concept:name and time:timestamp and ignores lifecycle
extensions. Timestamps are optional throughout; a trace that cannot be
timestamp-ordered is still usable for control-flow checking. Quality flags
are advisory evidence for the analyst, never verdicts.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Mapping

from .errors import (
    DuplicateCaseId,
    MalformedInput,
    MissingColumn,
    SchemaVersionMismatch,
    ValidationError,
)
from .petri import ProcessModel

CASE_CONTEXT_KEY = "context"


class FlagKind(Enum):
    MISSING_TIMESTAMP = "missing-timestamp"
    DUPLICATE_EVENT = "duplicate-event"
    ORDERING_CONFLICT = "ordering-conflict"
    IMPOSSIBLE_SEQUENCE = "impossible-sequence"
    MANUAL_FLAG = "manual-flag"


@dataclass(frozen=True)
class DataQualityFlag:
    case_id: str | None  # None means the flag concerns the whole log
    kind: FlagKind
    note: str = ""


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.activity:
            raise ValidationError("event with empty activity")
        object.__setattr__(self, "attributes", dict(self.attributes))


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...] = ()
    case_attributes: Mapping[str, str] = field(default_factory=dict)
    case_context: str = ""

    def __post_init__(self) -> None:
        if not self.case_id:
            raise ValidationError("trace with empty case id")
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "case_attributes", dict(self.case_attributes))

    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...] = ()
    log_attributes: Mapping[str, str] = field(default_factory=dict)
    quality_flags: tuple[DataQualityFlag, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "traces", tuple(self.traces))
        object.__setattr__(self, "log_attributes", dict(self.log_attributes))
        object.__setattr__(self, "quality_flags", tuple(self.quality_flags))
        seen: set[str] = set()
        for t in self.traces:
            if t.case_id in seen:
                raise DuplicateCaseId(f"case id {t.case_id!r} appears twice")
            seen.add(t.case_id)

    def trace(self, case_id: str) -> Trace:
        for t in self.traces:
            if t.case_id == case_id:
                return t
        raise KeyError(case_id)


def parse_timestamp(raw: str) -> datetime:
    # fromisoformat in 3.10 rejects a trailing Z; normalize it first.
    return datetime.fromisoformat(raw.replace("Z", "+00:00"))


# --- XES ---------------------------------------------------------------------

def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_xes(data: bytes) -> EventLog:
    """Parse the XES subset: log/trace/event with string and date attributes."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedInput(f"not well-formed XML: {exc}") from exc
    if _strip_ns(root.tag) != "log":
        raise MalformedInput(f"root element is <{_strip_ns(root.tag)}>, expected <log>")

    log_attributes: dict[str, str] = {}
    for child in root:
        if _strip_ns(child.tag) == "string" and child.get("key"):
            log_attributes[child.get("key")] = child.get("value") or ""

    traces: list[Trace] = []
    flags: list[DataQualityFlag] = []
    for t_elem in root:
        if _strip_ns(t_elem.tag) != "trace":
            continue
        case_id: str | None = None
        case_attributes: dict[str, str] = {}
        case_context = ""
        events: list[Event] = []
        for child in t_elem:
            tag = _strip_ns(child.tag)
            if tag == "string" and child.get("key"):
                key, value = child.get("key"), child.get("value") or ""
                if key == "concept:name":
                    case_id = value
                elif key == CASE_CONTEXT_KEY:
                    case_context = value
                else:
                    case_attributes[key] = value
            elif tag == "event":
                activity: str | None = None
                timestamp: datetime | None = None
                attributes: dict[str, str] = {}
                raw_ts: str | None = None
                for attr in child:
                    key = attr.get("key")
                    if not key:
                        continue
                    atag = _strip_ns(attr.tag)
                    if key == "concept:name":
                        activity = attr.get("value") or ""
                    elif key == "time:timestamp":
                        raw_ts = attr.get("value") or ""
                    elif key.startswith("lifecycle:"):
                        continue
                    elif atag in ("string", "int", "float", "boolean", "date"):
                        attributes[key] = attr.get("value") or ""
                if not activity:
                    raise MalformedInput(f"event without concept:name in trace {case_id!r}")
                if raw_ts is not None:
                    try:
                        timestamp = parse_timestamp(raw_ts)
                    except ValueError:
                        flags.append(DataQualityFlag(case_id, FlagKind.MISSING_TIMESTAMP,
                                                     f"unparseable timestamp {raw_ts!r} on {activity!r}"))
                events.append(Event(activity, timestamp, attributes))
        if not case_id:
            raise MalformedInput("trace without concept:name")
        traces.append(Trace(case_id, tuple(events), case_attributes, case_context))

    return EventLog(tuple(traces), log_attributes, tuple(flags))


# --- CSV ---------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnMapping:
    case: str
    activity: str
    timestamp: str | None = None
    context: str | None = None
    delimiter: str = ","


def parse_csv(data: bytes, mapping: ColumnMapping) -> EventLog:
    """Group CSV rows into traces by the case column.

    Events are sorted by timestamp when every row of the trace has one;
    otherwise file order is kept and unparseable timestamps are flagged.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"CSV is not UTF-8: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text), delimiter=mapping.delimiter)
    if reader.fieldnames is None:
        raise MalformedInput("empty CSV: no header row")
    header = set(reader.fieldnames)
    for col in (mapping.case, mapping.activity):
        if col not in header:
            raise MissingColumn(f"column {col!r} missing from header {sorted(header)}")
    for col in (mapping.timestamp, mapping.context):
        if col is not None and col not in header:
            raise MissingColumn(f"column {col!r} missing from header {sorted(header)}")

    extra_cols = [c for c in reader.fieldnames
                  if c not in {mapping.case, mapping.activity, mapping.timestamp, mapping.context}]
    by_case: dict[str, list[tuple[datetime | None, int, Event]]] = {}
    contexts: dict[str, str] = {}
    flags: list[DataQualityFlag] = []
    for i, row in enumerate(reader):
        case = (row.get(mapping.case) or "").strip()
        activity = (row.get(mapping.activity) or "").strip()
        if not case or not activity:
            raise MalformedInput(f"row {i + 2}: empty case or activity")
        timestamp: datetime | None = None
        if mapping.timestamp is not None:
            raw = (row.get(mapping.timestamp) or "").strip()
            if raw:
                try:
                    timestamp = parse_timestamp(raw)
                except ValueError:
                    flags.append(DataQualityFlag(case, FlagKind.MISSING_TIMESTAMP,
                                                 f"unparseable timestamp {raw!r} on {activity!r}"))
        if mapping.context is not None and row.get(mapping.context):
            contexts[case] = row[mapping.context]
        attributes = {c: row[c] for c in extra_cols if row.get(c)}
        by_case.setdefault(case, []).append((timestamp, i, Event(activity, timestamp, attributes)))

    traces: list[Trace] = []
    for case, entries in by_case.items():
        if all(ts is not None for ts, _, _ in entries):
            entries = sorted(entries, key=lambda e: (e[0], e[1]))
        events = tuple(e for _, _, e in entries)
        traces.append(Trace(case, events, {}, contexts.get(case, "")))
    return EventLog(tuple(traces), {}, tuple(flags))


# --- quality heuristics --------------------------------------------------------

def hard_precedences(model: ProcessModel) -> tuple[tuple[str, str], ...]:
    """Ordered (before, after) activity pairs declared in model metadata."""
    raw = model.metadata.get("hard_precedence", "[]")
    try:
        pairs = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"hard_precedence metadata is not JSON: {raw!r}") from exc
    out = []
    for pair in pairs:
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ValidationError(f"hard_precedence entries must be [before, after]: {pair!r}")
        out.append((str(pair[0]), str(pair[1])))
    return tuple(out)


def detect_quality_flags(log: EventLog, model: ProcessModel) -> list[DataQualityFlag]:
    """Heuristic, advisory evidence for the log-error check.

    Emits: duplicate consecutive identical events, timestamp ordering
    conflicts, and impossible sequences per the model's declared hard
    precedences. Deterministic and independent across traces.
    """
    precedences = hard_precedences(model)
    flags: list[DataQualityFlag] = []
    for trace in log.traces:
        prev: Event | None = None
        for event in trace.events:
            if prev is not None:
                if (event.activity == prev.activity and event.timestamp == prev.timestamp
                        and dict(event.attributes) == dict(prev.attributes)):
                    flags.append(DataQualityFlag(trace.case_id, FlagKind.DUPLICATE_EVENT,
                                                 f"consecutive identical events {event.activity!r}"))
                if (event.timestamp is not None and prev.timestamp is not None
                        and event.timestamp < prev.timestamp):
                    flags.append(DataQualityFlag(trace.case_id, FlagKind.ORDERING_CONFLICT,
                                                 f"{event.activity!r} timestamped before {prev.activity!r}"))
            prev = event
        acts = trace.activities()
        for before, after in precedences:
            seen_before = False
            for a in acts:
                if a == before:
                    seen_before = True
                elif a == after and not seen_before:
                    flags.append(DataQualityFlag(trace.case_id, FlagKind.IMPOSSIBLE_SEQUENCE,
                                                 f"{after!r} occurs without prior {before!r}"))
                    break
    return flags


# --- JSON codec (workspace persistence) ---------------------------------------

LOG_SCHEMA = "log@1"


def _event_to_dict(e: Event) -> dict:
    return {
        "activity": e.activity,
        "timestamp": e.timestamp.isoformat() if e.timestamp else None,
        "attributes": dict(sorted(e.attributes.items())),
    }


def log_to_dict(log: EventLog) -> dict:
    return {
        "schema": LOG_SCHEMA,
        "traces": [
            {
                "case_id": t.case_id,
                "events": [_event_to_dict(e) for e in t.events],
                "case_attributes": dict(sorted(t.case_attributes.items())),
                "case_context": t.case_context,
            }
            for t in log.traces
        ],
        "log_attributes": dict(sorted(log.log_attributes.items())),
        "quality_flags": [
            {"case_id": f.case_id, "kind": f.kind.value, "note": f.note}
            for f in log.quality_flags
        ],
    }


def log_from_dict(doc: Mapping) -> EventLog:
    if doc.get("schema") != LOG_SCHEMA:
        raise SchemaVersionMismatch(f"expected {LOG_SCHEMA}, got {doc.get('schema')!r}")
    try:
        traces = []
        for t in doc["traces"]:
            events = tuple(
                Event(
                    e["activity"],
                    parse_timestamp(e["timestamp"]) if e.get("timestamp") else None,
                    e.get("attributes", {}),
                )
                for e in t["events"]
            )
            traces.append(Trace(t["case_id"], events, t.get("case_attributes", {}),
                                t.get("case_context", "")))
        flags = tuple(
            DataQualityFlag(f.get("case_id"), FlagKind(f["kind"]), f.get("note", ""))
            for f in doc.get("quality_flags", [])
        )
        return EventLog(tuple(traces), doc.get("log_attributes", {}), flags)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad log document: {exc}") from exc


def traces_equal_modulo_flags(a: EventLog, b: EventLog) -> bool:
    return a.traces == b.traces and dict(a.log_attributes) == dict(b.log_attributes)
