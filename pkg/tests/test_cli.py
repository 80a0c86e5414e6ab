import json
from importlib import resources

import pytest

from devtriage.cli import main


@pytest.fixture()
def fixture_files(tmp_path):
    paths = {}
    for name in ("invoice_to_cash.pnml", "invoice_to_cash.xes", "answers_invoice_to_cash.json"):
        data = resources.files("devtriage").joinpath(f"fixtures/{name}").read_bytes()
        target = tmp_path / name
        target.write_bytes(data)
        paths[name] = target
    return paths


def run_cli(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_finds_the_payment_skip(tmp_path, fixture_files, capsys):
    code, out, err = run_cli(
        capsys, "check",
        "--model", str(fixture_files["invoice_to_cash.pnml"]),
        "--log", str(fixture_files["invoice_to_cash.xes"]),
    )
    assert code == 0, err
    payload = json.loads(out)
    assert len(payload["deviations"]) == 1
    deviation = payload["deviations"][0]
    assert deviation["pattern"] == "skip"
    assert deviation["skipped"] == ["Receive Payment"]
    assert payload["alignments"][0]["cost"] == 1


def test_check_output_is_byte_identical_across_runs(tmp_path, fixture_files, capsys):
    args = ("check",
            "--model", str(fixture_files["invoice_to_cash.pnml"]),
            "--log", str(fixture_files["invoice_to_cash.xes"]))
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    assert out1 == out2


def test_full_pipeline_workspace(tmp_path, fixture_files, capsys):
    ws = tmp_path / "ws"
    code, out, err = run_cli(
        capsys, "check",
        "--model", str(fixture_files["invoice_to_cash.pnml"]),
        "--log", str(fixture_files["invoice_to_cash.xes"]),
        "--workspace", str(ws),
        "--out", str(tmp_path / "check.json"),
    )
    assert code == 0, err

    code, out, err = run_cli(capsys, "aggregate", "--mode", "same-seq",
                             "--workspace", str(ws))
    assert code == 0, err
    sets = json.loads(out)["sets"]
    assert len(sets) == 1
    set_id = sets[0]["id"]

    code, out, err = run_cli(
        capsys, "assess",
        "--subject", set_id,
        "--answers", str(fixture_files["answers_invoice_to_cash.json"]),
        "--workspace", str(ws),
        "--confirm-fast-path",
    )
    assert code == 0, err
    assert out.splitlines()[0] == "negative-deviation / prevent"

    code, out, err = run_cli(capsys, "report", "--workspace", str(ws),
                             "--out", str(tmp_path / "report"))
    assert code == 0, err
    assert "negative-deviation: 1" in out
    outdir = tmp_path / "report"
    assert (outdir / "report.csv").exists()
    assert (outdir / "category_counts.png").exists()


def test_assess_fast_path_requires_confirmation(tmp_path, fixture_files, capsys):
    ws = tmp_path / "ws"
    run_cli(capsys, "check",
            "--model", str(fixture_files["invoice_to_cash.pnml"]),
            "--log", str(fixture_files["invoice_to_cash.xes"]),
            "--workspace", str(ws))
    _, out, _ = run_cli(capsys, "aggregate", "--mode", "same-seq", "--workspace", str(ws))
    set_id = json.loads(out)["sets"][0]["id"]
    code, out, err = run_cli(
        capsys, "assess", "--subject", set_id,
        "--answers", str(fixture_files["answers_invoice_to_cash.json"]),
        "--workspace", str(ws))
    assert code == 2
    assert "--confirm-fast-path" in err


def test_assess_out_of_order_exits_4(tmp_path, fixture_files, capsys):
    ws = tmp_path / "ws"
    run_cli(capsys, "check",
            "--model", str(fixture_files["invoice_to_cash.pnml"]),
            "--log", str(fixture_files["invoice_to_cash.xes"]),
            "--workspace", str(ws))
    check_payload = json.loads((tmp_path / "ws" / "workspace.json").read_text())
    (dev_id,) = check_payload["refs"]["deviations"]
    answers = json.loads(fixture_files["answers_invoice_to_cash.json"].read_text())
    swapped = [answers[1], answers[0]]  # step 2 before step 1
    bad = tmp_path / "bad_answers.json"
    bad.write_text(json.dumps(swapped))
    code, out, err = run_cli(capsys, "assess", "--subject", dev_id,
                             "--answers", str(bad), "--workspace", str(ws))
    assert code == 4
    assert "WrongStep" in err


def test_assess_individual_subject_stops_at_true_deviation(tmp_path, fixture_files, capsys):
    ws = tmp_path / "ws"
    run_cli(capsys, "check",
            "--model", str(fixture_files["invoice_to_cash.pnml"]),
            "--log", str(fixture_files["invoice_to_cash.xes"]),
            "--workspace", str(ws))
    manifest = json.loads((ws / "workspace.json").read_text())
    (dev_id,) = manifest["refs"]["deviations"]
    answers = json.loads(fixture_files["answers_invoice_to_cash.json"].read_text())
    screening = tmp_path / "steps123.json"
    screening.write_text(json.dumps(answers[:3]))
    code, out, err = run_cli(capsys, "assess", "--subject", dev_id,
                             "--answers", str(screening), "--workspace", str(ws))
    assert code == 0, err
    assert out.strip() == "true-deviation (eligible for aggregation)"


def test_aggregate_from_deviations_file(tmp_path, fixture_files, capsys):
    _, out, _ = run_cli(capsys, "check",
                        "--model", str(fixture_files["invoice_to_cash.pnml"]),
                        "--log", str(fixture_files["invoice_to_cash.xes"]))
    deviations = json.loads(out)["deviations"]
    dev_file = tmp_path / "devs.json"
    dev_file.write_text(json.dumps(deviations))
    code, out, err = run_cli(capsys, "aggregate", "--mode", "same-any",
                             "--deviations", str(dev_file))
    assert code == 0, err
    assert json.loads(out)["sets"][0]["frequency"] == 1


def test_decision_table_command(capsys):
    code, out, err = run_cli(capsys, "decision-table")
    assert code == 0
    assert "step1-data-quality: false-alarm-log / filter-out" in out
    code, out, err = run_cli(capsys, "decision-table", "--json")
    table = json.loads(out)
    assert len(table["categories"]) == 7


def test_missing_file_exits_3(tmp_path, capsys):
    code, out, err = run_cli(capsys, "check", "--model", str(tmp_path / "nope.pnml"),
                             "--log", str(tmp_path / "nope.xes"))
    assert code == 3


def test_invalid_answers_file_exits_2(tmp_path, fixture_files, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"not\": \"a list\"}")
    code, out, err = run_cli(capsys, "assess", "--subject", "x",
                             "--answers", str(bad), "--deviations", str(bad))
    assert code == 2
