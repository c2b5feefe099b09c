"""Scenario reports: computed vs. expected rows with per-cell tolerances."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .controller import TRACE_COLUMNS, TraceRecord

CHECKS = ("abs", "rel", "range", "equal", "info")


@dataclass
class Row:
    """One report cell.

    ``check`` selects how ``computed`` is compared: ``abs``/``rel`` against
    ``expected`` within ``tol``, ``range`` inside ``expected = (lo, hi)``,
    ``equal`` for exact matches, ``info`` for values that are only reported.
    """

    name: str
    computed: Any
    expected: Any = None
    tol: float | None = None
    check: str = "info"
    provenance: str = "trivial"
    unit: str = ""
    note: str = ""

    def __post_init__(self):
        if self.check not in CHECKS:
            raise ValueError(f"unknown check {self.check!r}")

    @property
    def abs_err(self) -> float | None:
        if self.check in ("abs", "rel") and _is_num(self.computed) and _is_num(self.expected):
            return abs(self.computed - self.expected)
        if self.check == "range" and _is_num(self.computed):
            lo, hi = self.expected
            return max(0.0, lo - self.computed, self.computed - hi)
        return None

    @property
    def rel_err(self) -> float | None:
        err = self.abs_err
        if err is None or self.check == "range":
            return None
        return err / abs(self.expected) if self.expected else (0.0 if err == 0 else math.inf)

    @property
    def passed(self) -> bool | None:
        if self.check == "info":
            return None
        if self.computed is None:
            return False
        if self.check == "equal":
            return self.computed == self.expected
        if self.check == "range":
            return self.abs_err <= (self.tol or 0.0)
        if self.check == "abs":
            return self.abs_err <= self.tol
        return self.rel_err <= self.tol

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "computed": _plain(self.computed),
            "expected": _plain(self.expected),
            "tol": self.tol,
            "check": self.check,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "pass": self.passed,
            "provenance": self.provenance,
            "unit": self.unit,
            "note": self.note,
        }


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _plain(x):
    if isinstance(x, tuple):
        return list(x)
    return x


@dataclass
class Report:
    scenario_id: str
    kind: str
    rows: list[Row] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    config_provenance: dict[str, str] = field(default_factory=dict)

    def add(self, *args, **kwargs) -> Row:
        row = Row(*args, **kwargs)
        self.rows.append(row)
        return row

    @property
    def checked(self) -> list[Row]:
        return [r for r in self.rows if r.check != "info"]

    @property
    def passed(self) -> bool:
        checked = self.checked
        return bool(checked) and all(r.passed for r in checked)

    def as_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "kind": self.kind,
            "pass": self.passed,
            "rows": [r.as_dict() for r in self.rows],
            "notes": list(self.notes),
            "config_provenance": dict(sorted(self.config_provenance.items())),
        }


def render_structured(report: Report) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"


REPORT_CSV_COLUMNS = (
    "name", "computed", "expected", "tol", "check", "abs_err", "rel_err", "pass", "provenance", "unit", "note",
)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    for row in report.rows:
        d = row.as_dict()
        w.writerow(_cell(d[c]) for c in REPORT_CSV_COLUMNS)
    return buf.getvalue()


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, list):
        return " ".join(_cell(v) for v in x)
    return str(x)


def render_summary(report: Report) -> str:
    lines = [f"scenario {report.scenario_id} ({report.kind}): {'PASS' if report.passed else 'FAIL'}"]
    for row in report.rows:
        status = {True: "pass", False: "FAIL", None: "    "}[row.passed]
        exp = "" if row.expected is None else f" expected {_short(row.expected)}"
        lines.append(f"  [{status}] {row.name}: {_short(row.computed)}{exp} {row.unit}".rstrip())
    for note in report.notes:
        lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def _short(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (tuple, list)):
        return "[" + ", ".join(_short(v) for v in x) + "]"
    return str(x)


def emit_report(report: Report, path: str | Path, fmt: str = "structured") -> Path:
    if not report.rows:
        raise ValueError(f"report {report.scenario_id!r} has no rows; refusing to write an empty pass")
    if fmt == "structured":
        text = render_structured(report)
    elif fmt == "csv":
        text = render_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return _write(path, text)


def emit_trace(trace: Sequence[TraceRecord], path: str | Path) -> Path:
    if not trace:
        raise ValueError(f"empty trace; nothing to write to {path}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for rec in trace:
        w.writerow(_cell(getattr(rec, c)) for c in TRACE_COLUMNS)
    return _write(path, buf.getvalue())


def _write(path: str | Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return path


def read_trace(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def check_trace_times(rows: Iterable[dict]) -> bool:
    ts = [float(r["t"]) for r in rows]
    return all(b > a for a, b in zip(ts, ts[1:]))
