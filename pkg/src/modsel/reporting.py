"""Risk-report rows and their CSV persistence.

Serialized reports must be byte-identical across reruns with the same seeds,
so rows carry no wall-clock data; runtimes live on the in-memory report
object only and are surfaced on stderr by the CLI.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

CSV_COLUMNS = ("experiment", "n", "model", "mc_mean", "mc_se", "exact_or_bound", "reps", "seed", "passed")


@dataclass(frozen=True)
class ReportRow:
    """One Monte Carlo (or exact) check: estimate, its SE, and the value or
    bound it is checked against."""

    experiment: str
    n: int
    model: str
    mc_mean: float
    mc_se: float
    exact_or_bound: float
    reps: int
    seed: int
    passed: bool | None = None


@dataclass
class RiskReport:
    experiment: str
    rows: list[ReportRow] = field(default_factory=list)
    runtime_s: float = 0.0  # never serialized
    tables: dict[str, str] = field(default_factory=dict)  # extra named artifacts (CSV/JSON text)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows if r.passed is not None)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)  # shortest round-trip form: deterministic
    return str(x)


def rows_to_csv_text(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.experiment,
                _fmt(r.n),
                r.model,
                _fmt(r.mc_mean),
                _fmt(r.mc_se),
                _fmt(r.exact_or_bound),
                _fmt(r.reps),
                _fmt(r.seed),
                _fmt(r.passed),
            ]
        )
    return buf.getvalue()


def write_report_csv(path: str | Path, report: RiskReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv_text(report.rows))
    return path


def append_rows_csv(path: str | Path, rows: Iterable[ReportRow]) -> Path:
    """Append rows, writing the header only when the file is new."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = rows_to_csv_text(rows)
    if path.exists():
        text = text.split("\n", 1)[1]
        with path.open("a") as fh:
            fh.write(text)
    else:
        path.write_text(text)
    return path
