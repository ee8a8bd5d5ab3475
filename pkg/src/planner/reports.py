import csv
import io
import json
import logging
from pathlib import Path
from typing import Literal

import openpyxl

from planner.bench import MetricsTable


logger = logging.getLogger(__name__)

ReportFormat = Literal["csv", "json", "markdown", "xlsx"]
FORMATS = ("csv", "json", "markdown", "xlsx")

METRIC_HEADER = ["task", "tool", "config", "nodes_mean", "failed_attempts_mean", "success", "plan_length_mean"]
BUDGET_HEADER = ["config", "budget", "successes", "cases", "success_rate"]
ADAPTABILITY_HEADER = ["task", "config", "correct", "random_correct", "cases"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def metric_rows(table: MetricsTable) -> list[list]:
    return [
        [r.task, r.tool, r.config, r.nodes_mean, r.failed_attempts_mean, r.success, r.plan_length_mean]
        for r in table.rows
    ]


def budget_rows(table: MetricsTable) -> list[list]:
    return [[r.config, r.budget, r.successes, r.cases, r.success_rate] for r in table.budget_rows]


def adaptability_rows(table: MetricsTable) -> list[list]:
    return [[r.task, r.config, r.correct, r.random_correct, r.cases] for r in table.adaptability_rows]


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}{path.suffix}")


def _csv(header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def _markdown(header: list[str], rows: list[list]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    return "\n".join(lines) + "\n"


def _json(table: MetricsTable) -> str:
    def records(header, rows):
        return [dict(zip(header, (round(v, 6) if isinstance(v, float) else v for v in row))) for row in rows]

    data = {
        "experiment": table.experiment,
        "metrics": records(METRIC_HEADER, metric_rows(table)),
        "budget": records(BUDGET_HEADER, budget_rows(table)),
        "adaptability": records(ADAPTABILITY_HEADER, adaptability_rows(table)),
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _xlsx(table: MetricsTable, path: Path):
    workbook = openpyxl.Workbook()
    sheet = workbook.active
    sheet.title = "metrics"
    sheet.append(METRIC_HEADER)
    for row in metric_rows(table):
        sheet.append(row)

    if table.budget_rows:
        sheet = workbook.create_sheet("budget")
        sheet.append(BUDGET_HEADER)
        for row in budget_rows(table):
            sheet.append(row)

    if table.adaptability_rows:
        sheet = workbook.create_sheet("adaptability")
        sheet.append(ADAPTABILITY_HEADER)
        for row in adaptability_rows(table):
            sheet.append(row)

    workbook.save(path)


def render(table: MetricsTable, fmt: ReportFormat) -> str:
    """Text rendering of the main table (plus the other tables for json and markdown)."""
    if fmt == "csv":
        return _csv(METRIC_HEADER, metric_rows(table))
    if fmt == "json":
        return _json(table)
    if fmt == "markdown":
        parts = [_markdown(METRIC_HEADER, metric_rows(table))]
        if table.budget_rows:
            parts.append(_markdown(BUDGET_HEADER, budget_rows(table)))
        if table.adaptability_rows:
            parts.append(_markdown(ADAPTABILITY_HEADER, adaptability_rows(table)))
        return "\n".join(parts)
    raise ValueError(f"format '{fmt}' has no text rendering")


def emit_report(table: MetricsTable, fmt: ReportFormat, path: str | Path) -> list[Path]:
    """
    Write the report and return the written paths.

    CSV puts the budget curve and the adaptability table into sibling files
    ``<stem>_budget.csv`` and ``<stem>_adaptability.csv``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format '{fmt}'")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    written = [path]
    if fmt == "xlsx":
        _xlsx(table, path)
    else:
        path.write_text(render(table, fmt), encoding="utf-8")
    if fmt == "csv":
        if table.budget_rows:
            budget_path = _sibling(path, "budget")
            budget_path.write_text(_csv(BUDGET_HEADER, budget_rows(table)), encoding="utf-8")
            written.append(budget_path)
        if table.adaptability_rows:
            adaptability_path = _sibling(path, "adaptability")
            adaptability_path.write_text(_csv(ADAPTABILITY_HEADER, adaptability_rows(table)), encoding="utf-8")
            written.append(adaptability_path)
    logger.info("Report written to %s", ", ".join(str(p) for p in written))
    return written
