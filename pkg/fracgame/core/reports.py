# fracgame/core/reports.py
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

GRADE_ASSERT = "assert"
GRADE_INFO = "info"


def jsonable(value: Any) -> Any:
    """Plain-JSON view of numpy scalars/arrays, tuples and non-finite floats."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        if math.isfinite(f):
            return f
        return repr(f)
    return value


def canonical_json(payload: Any) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, separators=(",", ":"))


def digest(payload: Any, length: int = 12) -> str:
    return hashlib.sha1(canonical_json(payload).encode()).hexdigest()[:length]


@dataclass(frozen=True)
class CheckReport:
    """One lemma/property check: both sides, signed margin, verdict.

    margin >= 0 means the check holds without using the tolerance.
    """
    check: str
    inputs: dict[str, Any]
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    passed: bool
    grade: str = GRADE_ASSERT
    note: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def inequality(cls, check: str, inputs: dict[str, Any], lhs: float, rhs: float,
                   tol: float = 0.0, *, grade: str = GRADE_ASSERT, note: str = "",
                   extra: dict[str, Any] | None = None) -> "CheckReport":
        lhs, rhs = float(lhs), float(rhs)
        margin = rhs - lhs
        ok = bool(np.isfinite(lhs) and np.isfinite(rhs) and margin >= -tol)
        return cls(check, dict(inputs), lhs, rhs, margin, float(tol), ok, grade, note, dict(extra or {}))

    @classmethod
    def equality(cls, check: str, inputs: dict[str, Any], lhs: float, rhs: float,
                 tol: float, *, relative: bool = False, grade: str = GRADE_ASSERT,
                 note: str = "", extra: dict[str, Any] | None = None) -> "CheckReport":
        lhs, rhs = float(lhs), float(rhs)
        err = abs(lhs - rhs)
        if relative:
            err /= max(abs(rhs), 1e-300)
        margin = float(tol) - err
        ok = bool(np.isfinite(err) and margin >= 0.0)
        return cls(check, dict(inputs), lhs, rhs, margin, float(tol), ok, grade, note, dict(extra or {}))

    @classmethod
    def info(cls, check: str, inputs: dict[str, Any], lhs: float, rhs: float = float("nan"),
             *, note: str = "", extra: dict[str, Any] | None = None) -> "CheckReport":
        return cls(check, dict(inputs), float(lhs), float(rhs), float("nan"), 0.0, True,
                   GRADE_INFO, note, dict(extra or {}))

    @property
    def failed(self) -> bool:
        return self.grade == GRADE_ASSERT and not self.passed

    @property
    def inputs_digest(self) -> str:
        return digest(self.inputs)

    def to_record(self, scenario: str = "", seed: int | None = None) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "lemma": self.check,
            "inputs_digest": self.inputs_digest,
            "inputs": self.inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "grade": self.grade,
            "scenario": scenario,
            "seed": seed,
        }
        if self.note:
            rec["note"] = self.note
        if self.extra:
            rec["extra"] = self.extra
        return jsonable(rec)


def summarize(reports: Sequence[CheckReport]) -> dict[str, Any]:
    per_check: dict[str, dict[str, int]] = {}
    for r in reports:
        row = per_check.setdefault(r.check, {"total": 0, "failed": 0, "info": 0})
        row["total"] += 1
        if r.grade == GRADE_INFO:
            row["info"] += 1
        elif not r.passed:
            row["failed"] += 1
    return {
        "reports": len(reports),
        "failures": sum(1 for r in reports if r.failed),
        "checks": dict(sorted(per_check.items())),
    }


def write_jsonl(path: Path, records: Iterable[Mapping[str, Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(canonical_json(rec))
            f.write("\n")
            n += 1
    return n


def write_json(path: Path, payload: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(jsonable(payload), f, sort_keys=True, indent=2)
        f.write("\n")


def write_trace_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
            n += 1
    return n
