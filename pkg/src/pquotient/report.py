"""Violation reports shared by metric validation and the property checkers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

MAX_LISTED = 100


@dataclass(frozen=True)
class Violation:
    check: str
    indices: tuple[int, ...]
    lhs: float
    rhs: float
    tolerance: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.check,
            "indices": list(self.indices),
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "tolerance": _num(self.tolerance),
        }


@dataclass
class Report:
    """Outcome of one named check.

    ``violations`` lists at most ``MAX_LISTED`` entries per constraint;
    ``counts`` always holds the full number found per constraint.
    """

    name: str
    violations: list[Violation] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(self.counts.values())

    def __bool__(self) -> bool:
        return self.ok

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, check: str, indices, lhs: float, rhs: float, tolerance: float) -> None:
        n = self.counts.get(check, 0)
        self.counts[check] = n + 1
        if n < MAX_LISTED:
            idx = tuple(int(i) for i in indices)
            self.violations.append(Violation(check, idx, float(lhs), float(rhs), float(tolerance)))

    def add_many(self, check: str, index_rows, lhs, rhs, tolerance: float, total: int | None = None) -> None:
        """Record a batch of violations found by a vectorized scan."""
        rows = list(index_rows)
        n = self.counts.get(check, 0)
        room = max(0, MAX_LISTED - n)
        for row, a, b in list(zip(rows, lhs, rhs))[:room]:
            self.violations.append(
                Violation(check, tuple(int(i) for i in row), float(a), float(b), float(tolerance))
            )
        self.counts[check] = n + (len(rows) if total is None else int(total))

    def touch(self, check: str) -> None:
        """Register a constraint as evaluated (zero violations unless added)."""
        self.counts.setdefault(check, 0)

    def merge(self, other: Report) -> None:
        for v in other.violations:
            self.violations.append(v)
        for k, c in other.counts.items():
            self.counts[k] = self.counts.get(k, 0) + c
        self.notices.extend(other.notices)

    def summary(self) -> str:
        if self.ok:
            return f"{self.name}: ok"
        bad = ", ".join(f"{k}={c}" for k, c in sorted(self.counts.items()) if c)
        return f"{self.name}: {self.total} violation(s) [{bad}]"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "ok": self.ok,
            "counts": dict(sorted(self.counts.items())),
            "violations": [v.to_dict() for v in self.violations],
            "notices": list(self.notices),
        }


def _num(x: float):
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        return str(x)
    return x
