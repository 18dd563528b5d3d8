"""Machine-readable experiment reports.

A report is a list of named checks, each with a measured value, a threshold,
and a comparator.  JSON and CSV renderings carry the same numbers (floats are
written with ``repr``); the timestamp is the only field allowed to differ
between two runs of the same configuration.
"""

from __future__ import annotations

import json
import math
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

__all__ = ["CheckRecord", "Report", "report_to_json", "report_to_csv", "write_report"]

SCHEMA_VERSION = 1

_OPS = {
    "<=": lambda v, t: v <= t,
    ">=": lambda v, t: v >= t,
    "==": lambda v, t: v == t,
    "finite": lambda v, t: math.isfinite(v),
    "report": lambda v, t: True,  # informational row, always passes
}


@dataclass(frozen=True)
class CheckRecord:
    """One measured quantity against its pinned threshold."""

    name: str
    value: float
    threshold: float
    comparator: str = "<="
    note: str = ""

    def __post_init__(self) -> None:
        if self.comparator not in _OPS:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def passed(self) -> bool:
        return _OPS[self.comparator](self.value, self.threshold)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.comparator == "report":
            return f"[info] {self.name} = {self.value:.6g}"
        return (
            f"[{status}] {self.name}: {self.value:.6g} {self.comparator} "
            f"{self.threshold:.6g}"
        )


@dataclass
class Report:
    """Checks plus enough context to reproduce them."""

    experiment: str
    seed: int
    config: dict
    checks: list[CheckRecord] = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not self.environment:
            self.environment = {
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "platform": platform.system().lower(),
            }
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def report_to_json(report: Report, include_timestamp: bool = True) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "experiment": report.experiment,
        "seed": report.seed,
        "config": report.config,
        "environment": report.environment,
        "passed": report.passed,
        "checks": [
            {
                "name": c.name,
                "value": c.value,
                "threshold": c.threshold,
                "comparator": c.comparator,
                "passed": c.passed,
                "note": c.note,
            }
            for c in report.checks
        ],
    }
    if include_timestamp:
        payload["timestamp"] = report.timestamp
    return json.dumps(payload, indent=2, sort_keys=True)


def report_to_csv(report: Report, include_timestamp: bool = True) -> str:
    lines = ["name,value,threshold,comparator,passed,note"]
    for c in report.checks:
        lines.append(
            f"{c.name},{c.value!r},{c.threshold!r},{c.comparator},{c.passed},{c.note}"
        )
    meta = f"# experiment={report.experiment} seed={report.seed} schema={SCHEMA_VERSION}"
    if include_timestamp:
        meta += f" timestamp={report.timestamp}"
    return meta + "\n" + "\n".join(lines) + "\n"


def write_report(report: Report, path: str | Path, fmt: str = "json") -> None:
    text = report_to_json(report) if fmt == "json" else report_to_csv(report)
    Path(path).write_text(text)


def validate_report_payload(payload: dict) -> list[str]:
    """Schema check for a parsed JSON report; returns problem descriptions."""
    problems = []
    required = {
        "schema_version": int,
        "experiment": str,
        "seed": int,
        "config": dict,
        "environment": dict,
        "passed": bool,
        "checks": list,
    }
    for key, typ in required.items():
        if key not in payload:
            problems.append(f"missing key {key!r}")
        elif not isinstance(payload[key], typ):
            problems.append(f"key {key!r} has type {type(payload[key]).__name__}")
    for i, chk in enumerate(payload.get("checks", [])):
        for key in ("name", "value", "threshold", "comparator", "passed"):
            if key not in chk:
                problems.append(f"check {i} missing {key!r}")
    return problems
