"""Check records and the JSON verification report."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any

from . import __version__

TOOL = "virial-lab"


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if hasattr(value, "item"):
        return _clean(value.item())
    return value


@dataclass
class CheckRecord:
    """One pass/fail check.

    ``passed`` defaults to ``value <= tolerance``; pass it explicitly for
    checks with another comparison.
    """

    check_id: str
    anchor: str
    value: Any
    tolerance: float | None = None
    inputs: dict = field(default_factory=dict)
    passed: bool | None = None

    def __post_init__(self):
        self.value = _clean(self.value)
        if self.passed is None:
            self.passed = bool(isinstance(self.value, (int, float)) and self.value <= self.tolerance)
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "anchor": self.anchor,
            "inputs_digest": digest(self.inputs),
            "value": self.value,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class VerificationReport:
    checks: list[CheckRecord]
    config: dict
    timestamp: float = field(default_factory=time.time)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        n_pass = sum(c.passed for c in self.checks)
        return {"total": len(self.checks), "passed": n_pass, "failed": len(self.checks) - n_pass}

    def to_dict(self, with_timestamp: bool = True) -> dict:
        out = {
            "tool": TOOL,
            "version": __version__,
            "config_digest": digest(self.config),
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.check_id)],
            "summary": self.summary(),
        }
        if with_timestamp:
            out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.timestamp))
        return out

    def to_json(self, with_timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(with_timestamp), indent=2, sort_keys=True) + "\n"


def summarize(report: dict) -> list[str]:
    """Human-readable lines for a loaded report."""
    lines = []
    for c in report.get("checks", []):
        status = "PASS" if c["pass"] else "FAIL"
        tol = "" if c.get("tolerance") is None else f" (tol {c['tolerance']:.3g})"
        val = c["value"]
        val = f"{val:.6g}" if isinstance(val, float) else str(val)
        lines.append(f"{status} {c['check_id']}: {val}{tol}")
    s = report.get("summary", {})
    lines.append(f"{s.get('passed', 0)}/{s.get('total', 0)} checks passed")
    return lines
