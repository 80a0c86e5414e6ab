"""Report rendering: stable text, delimited CSV, and figure files.

The text format is line-oriented UTF-8 with no timestamps, so identical
workspaces render byte-identical reports. Figures are written next to the
delimited output as PNGs (category distribution, set frequencies) when
matplotlib is asked for; the import stays local so library users without a
display stack never pay for it.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .workspace import Report


def render_text(report: Report) -> str:
    lines = [
        "deviation triage report",
        f"workspace: {report.workspace_id}",
        "",
        "inventory:",
    ]
    for key in sorted(report.snapshot):
        lines.append(f"  {key}: {report.snapshot[key]}")
    lines.append("")
    lines.append("category counts:")
    if report.category_counts:
        for category in sorted(report.category_counts):
            lines.append(f"  {category}: {report.category_counts[category]}")
    else:
        lines.append("  (no concluded assessments)")
    lines.append("")
    for row in report.set_rows:
        lines.append(f"set {row.set_id}")
        lines.append(f"  frequency: {row.frequency}")
        lines.append(f"  sample cases: {', '.join(row.sample_cases)}")
        lines.append(f"  category: {row.category or '-'}")
        lines.append(f"  action: {row.action or '-'}")
        if row.chosen_reaction:
            lines.append(f"  chosen reaction: {row.chosen_reaction}")
        for rationale in row.rationales:
            lines.append(f"  rationale {rationale}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def render_csv(report: Report, delimiter: str = ",") -> str:
    """One row per set: the delimited companion to the figures."""
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["set_id", "frequency", "category", "action", "sample_cases"])
    for row in report.set_rows:
        writer.writerow([
            row.set_id,
            row.frequency,
            row.category or "",
            row.action or "",
            ";".join(row.sample_cases),
        ])
    return buf.getvalue()


def render_figures(report: Report, outdir: str | Path) -> list[Path]:
    """Write report figures as PNG files and return their paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if report.category_counts:
        categories = sorted(report.category_counts)
        counts = [report.category_counts[c] for c in categories]
        fig, ax = plt.subplots(figsize=(8, 4.5))
        ax.barh(categories, counts, color="#4878a8")
        ax.set_xlabel("concluded assessments")
        ax.set_title(f"Outcome categories — {report.workspace_id}")
        ax.xaxis.get_major_locator().set_params(integer=True)
        fig.tight_layout()
        path = outdir / "category_counts.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if report.set_rows:
        labels = [r.set_id for r in report.set_rows]
        freqs = [r.frequency for r in report.set_rows]
        fig, ax = plt.subplots(figsize=(8, 4.5))
        ax.bar(labels, freqs, color="#7aa874")
        ax.set_ylabel("deviating traces")
        ax.set_title(f"Deviation set frequencies — {report.workspace_id}")
        ax.yaxis.get_major_locator().set_params(integer=True)
        ax.tick_params(axis="x", labelrotation=30)
        fig.tight_layout()
        path = outdir / "set_frequencies.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written


def write_report_files(report: Report, outdir: str | Path, *, figures: bool = True) -> list[Path]:
    """Write report.json, report.txt, report.csv, and optional figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = outdir / "report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    written.append(json_path)
    text_path = outdir / "report.txt"
    text_path.write_text(render_text(report), encoding="utf-8")
    written.append(text_path)
    csv_path = outdir / "report.csv"
    csv_path.write_text(render_csv(report), encoding="utf-8")
    written.append(csv_path)
    if figures:
        written.extend(render_figures(report, outdir))
    return written
