import pytest

from devtriage.errors import DuplicateCaseId, MalformedInput, MissingColumn
from devtriage.eventlog import (
    ColumnMapping,
    DataQualityFlag,
    EventLog,
    Event,
    FlagKind,
    Trace,
    detect_quality_flags,
    log_from_dict,
    log_to_dict,
    parse_csv,
    parse_xes,
)
from devtriage.petri import Marking, ProcessModel, Transition


def _xes(body: str) -> bytes:
    return f'<?xml version="1.0"?><log>{body}</log>'.encode()


def _model_with_precedence(pairs) -> ProcessModel:
    import json

    return ProcessModel(
        id="m",
        places=frozenset({"p"}),
        transitions=(Transition("t", "login"),),
        arcs=(("p", "t"),),
        initial_marking=Marking({"p": 1}),
        final_marking=Marking(),
        metadata={"hard_precedence": json.dumps(pairs)},
    )


def test_fixture_log_shape(invoice_log):
    assert len(invoice_log.traces) == 1
    trace = invoice_log.traces[0]
    assert trace.case_id == "inv-0042"
    assert trace.activities() == ("Receive Order", "Send Invoice", "Clear Invoice")
    assert trace.case_attributes["customer"] == "C-312"
    assert "open balance" in trace.case_context
    assert invoice_log.quality_flags == ()


def test_empty_log():
    assert parse_xes(b"<log/>").traces == ()


def test_duplicate_case_ids_rejected():
    body = """
      <trace><string key="concept:name" value="c1"/></trace>
      <trace><string key="concept:name" value="c1"/></trace>"""
    with pytest.raises(DuplicateCaseId):
        parse_xes(_xes(body))


def test_event_without_activity_rejected():
    body = '<trace><string key="concept:name" value="c1"/><event/></trace>'
    with pytest.raises(MalformedInput):
        parse_xes(_xes(body))


def test_unparseable_timestamp_becomes_flag_not_error():
    body = """
      <trace><string key="concept:name" value="c1"/>
        <event>
          <string key="concept:name" value="A"/>
          <date key="time:timestamp" value="not-a-date"/>
        </event>
      </trace>"""
    log = parse_xes(_xes(body))
    assert log.traces[0].events[0].timestamp is None
    assert [f.kind for f in log.quality_flags] == [FlagKind.MISSING_TIMESTAMP]
    assert log.quality_flags[0].case_id == "c1"


def test_xes_not_xml():
    with pytest.raises(MalformedInput):
        parse_xes(b"nope")


def test_csv_three_rows_one_case():
    data = b"case,activity\nc1,A\nc1,B\nc1,C\n"
    log = parse_csv(data, ColumnMapping(case="case", activity="activity"))
    assert len(log.traces) == 1
    assert log.traces[0].activities() == ("A", "B", "C")


def test_csv_rows_sorted_by_timestamp_without_flag():
    data = (b"case,activity,ts\n"
            b"c1,B,2024-01-02T00:00:00\n"
            b"c1,A,2024-01-01T00:00:00\n")
    log = parse_csv(data, ColumnMapping(case="case", activity="activity", timestamp="ts"))
    assert log.traces[0].activities() == ("A", "B")
    assert log.quality_flags == ()


def test_csv_missing_activity_column():
    with pytest.raises(MissingColumn):
        parse_csv(b"case,act\nc1,A\n", ColumnMapping(case="case", activity="activity"))


def test_csv_empty_file():
    with pytest.raises(MalformedInput):
        parse_csv(b"", ColumnMapping(case="case", activity="activity"))


def test_csv_context_and_extra_attributes():
    data = b"case,activity,note,who\nc1,A,urgent order,alice\n"
    log = parse_csv(data, ColumnMapping(case="case", activity="activity", context="note"))
    assert log.traces[0].case_context == "urgent order"
    assert log.traces[0].events[0].attributes == {"who": "alice"}


def test_impossible_sequence_flag():
    model = _model_with_precedence([["login", "logout"]])
    log = EventLog(traces=(Trace("c1", (Event("logout"), Event("login"))),))
    flags = detect_quality_flags(log, model)
    assert [f.kind for f in flags] == [FlagKind.IMPOSSIBLE_SEQUENCE]
    assert flags[0].case_id == "c1"


def test_conformant_trace_yields_no_flags(invoice_log, invoice_model):
    assert detect_quality_flags(invoice_log, invoice_model) == []


def test_ordering_conflict_flag(invoice_model):
    from devtriage.eventlog import parse_timestamp

    events = (
        Event("A", parse_timestamp("2024-01-02T00:00:00")),
        Event("B", parse_timestamp("2024-01-01T00:00:00")),
    )
    log = EventLog(traces=(Trace("c1", events),))
    flags = detect_quality_flags(log, invoice_model)
    assert [f.kind for f in flags] == [FlagKind.ORDERING_CONFLICT]


def test_duplicate_consecutive_identical_events(invoice_model):
    log = EventLog(traces=(Trace("c1", (Event("A"), Event("A"))),))
    flags = detect_quality_flags(log, invoice_model)
    assert [f.kind for f in flags] == [FlagKind.DUPLICATE_EVENT]


def test_consecutive_same_activity_different_timestamps_not_duplicate(invoice_model):
    from devtriage.eventlog import parse_timestamp

    events = (
        Event("A", parse_timestamp("2024-01-01T00:00:00")),
        Event("A", parse_timestamp("2024-01-01T01:00:00")),
    )
    log = EventLog(traces=(Trace("c1", events),))
    assert detect_quality_flags(log, invoice_model) == []


def test_flags_are_per_trace_and_deterministic(invoice_model):
    model = _model_with_precedence([["login", "logout"]])
    t1 = Trace("c1", (Event("logout"),))
    t2 = Trace("c2", (Event("login"), Event("logout")))
    forward = detect_quality_flags(EventLog(traces=(t1, t2)), model)
    backward = detect_quality_flags(EventLog(traces=(t2, t1)), model)
    assert {(f.case_id, f.kind) for f in forward} == {(f.case_id, f.kind) for f in backward}
    assert {(f.case_id, f.kind) for f in forward} == {("c1", FlagKind.IMPOSSIBLE_SEQUENCE)}


def test_log_json_roundtrip(invoice_log):
    assert log_from_dict(log_to_dict(invoice_log)) == invoice_log


def test_log_json_roundtrip_with_flags():
    log = EventLog(
        traces=(Trace("c1", (Event("A"),)),),
        log_attributes={"source": "test"},
        quality_flags=(DataQualityFlag("c1", FlagKind.MANUAL_FLAG, "checked by hand"),),
    )
    assert log_from_dict(log_to_dict(log)) == log
