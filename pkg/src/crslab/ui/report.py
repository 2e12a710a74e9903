"""Report rows and their CSV, JSON and table renderings"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console

from ..models.choices import OutputFormat
from ..models.profiles import AcceptanceProfile
from .display import ReportTable

MISSING = "n/a"


@dataclass
class Report:
    """Named columns with one dict per row; column order is the output order"""
    title: str
    columns: Sequence[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, **values: Any) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ValueError(f"Unknown report columns: {sorted(unknown)}")
        self.rows.append(values)


def format_value(value: Any) -> str:
    """Six significant digits for floats, n/a for missing values"""
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return MISSING
        return "%.6g" % value
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def emit_report(report: Report, fmt: OutputFormat, width: int = 120) -> str:
    """Render a report; CSV always carries the header, even without rows"""
    if fmt is OutputFormat.CSV:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([format_value(row.get(column)) for column in report.columns])
        return buffer.getvalue()
    if fmt is OutputFormat.JSON:
        document = {
            "title": report.title,
            "columns": list(report.columns),
            "rows": [{column: _json_value(row.get(column)) for column in report.columns} for row in report.rows],
        }
        return json.dumps(document, indent=2) + "\n"

    console = Console(file=io.StringIO(), width=width, color_system=None)
    rows = [[format_value(row.get(column)) for column in report.columns] for row in report.rows]
    ReportTable(console).show(report.title, report.columns, rows)
    return console.file.getvalue()


def selectability_report(profile: AcceptanceProfile, title: str = "Selectability") -> Report:
    report = Report(title, ("product_id", "x", "ratio", "ci_lo", "ci_hi"))
    for entry in profile.entries:
        report.add(product_id=entry.product_id, x=entry.x, ratio=entry.ratio,
                   ci_lo=entry.ci_lo, ci_hi=entry.ci_hi)
    return report


def feasibility_report(profile: AcceptanceProfile, title: str = "Exact acceptance") -> Report:
    report = Report(title, ("product_id", "x", "feas_prob", "accept_prob", "ratio", "capped"))
    for entry in profile.entries:
        report.add(product_id=entry.product_id, x=entry.x, feas_prob=entry.feas_prob,
                   accept_prob=entry.accept_prob, ratio=entry.ratio, capped=entry.capped)
    return report


def single_row_report(title: str, values: Dict[str, Any], columns: Optional[Sequence[str]] = None) -> Report:
    report = Report(title, tuple(columns or values.keys()))
    report.add(**values)
    return report
