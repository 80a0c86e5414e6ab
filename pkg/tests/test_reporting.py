from devtriage.reporting import render_csv, render_text, write_report_files
from devtriage.workspace import build_report

from test_workspace import populated_workspace


def test_text_report_is_stable_and_timestamp_free(invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    report = build_report(ws)
    first = render_text(report)
    second = render_text(build_report(ws))
    assert first == second
    assert "2025" not in first  # no timestamps in the data sections
    assert "negative-deviation: 1" in first
    assert "action: prevent" in first


def test_csv_has_one_row_per_set(invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    csv_text = render_csv(build_report(ws))
    lines = csv_text.strip().splitlines()
    assert lines[0] == "set_id,frequency,category,action,sample_cases"
    assert len(lines) == 1 + len(ws.sets)
    assert "negative-deviation" in lines[1]


def test_report_files_include_figures(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    report = build_report(ws)
    written = write_report_files(report, tmp_path / "out")
    names = {p.name for p in written}
    assert {"report.json", "report.txt", "report.csv"} <= names
    assert "category_counts.png" in names
    assert "set_frequencies.png" in names
    for p in written:
        assert p.exists() and p.stat().st_size > 0


def test_report_files_without_figures(tmp_path, invoice_model, invoice_log):
    ws = populated_workspace(invoice_model, invoice_log)
    written = write_report_files(build_report(ws), tmp_path / "out", figures=False)
    assert {p.name for p in written} == {"report.json", "report.txt", "report.csv"}
