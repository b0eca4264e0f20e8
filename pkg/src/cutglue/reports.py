"""Structured verification records shared by all check routines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


def fmt(x: float) -> str:
    """Shortest round-tripping decimal form, for byte-stable report files."""
    return repr(float(x))


@dataclass
class Check:
    """Outcome of one identity check."""

    name: str
    residual: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def as_row(self) -> dict:
        row = {
            "check": self.name,
            "residual": fmt(self.residual),
            "tolerance": fmt(self.tolerance),
            "passed": str(self.passed).lower(),
        }
        row.update({k: str(v) for k, v in sorted(self.details.items())})
        return row


@dataclass
class Report:
    """A named collection of checks."""

    name: str
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check) -> None:
        self.checks.append(check)

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def to_csv(self) -> str:
        keys = ["check", "residual", "tolerance", "passed"]
        extra = sorted({k for c in self.checks for k in c.details})
        keys += [k for k in extra if k not in keys]
        lines = [",".join(keys)]
        for c in self.checks:
            row = c.as_row()
            lines.append(",".join(row.get(k, "") for k in keys))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "report": self.name,
            "passed": self.passed,
            "checks": [c.as_row() for c in self.checks],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
