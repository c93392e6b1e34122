import json
import math

import numpy as np
import pytest

from fracgame.core.errors import (
    AccuracyError, AlignmentError, BudgetError, ConditioningError, ConfigError, DivergenceError, DomainError,
    FracGameError, exit_code_for,
)
from fracgame.core.reports import (
    GRADE_INFO, CheckReport, jsonable, summarize, write_json, write_jsonl, write_trace_csv,
)
from fracgame.tools.compare_reports import compare, load


def test_inequality_and_equality():
    ok = CheckReport.inequality("le", {"a": 1}, 1.0, 2.0)
    assert ok.passed and ok.margin == 1.0
    edge = CheckReport.inequality("le", {}, 2.0 + 1e-13, 2.0, 1e-12)
    assert edge.passed and edge.margin < 0.0
    assert CheckReport.inequality("le", {}, float("nan"), 1.0).failed
    rel = CheckReport.equality("eq", {}, 101.0, 100.0, 0.02, relative=True)
    assert rel.passed
    assert not CheckReport.equality("eq", {}, 101.0, 100.0, 0.5).passed


def test_info_never_fails():
    r = CheckReport.info("note", {}, 3.0)
    assert r.grade == GRADE_INFO
    assert not r.failed
    assert math.isnan(r.rhs)


def test_record_and_jsonable():
    r = CheckReport.info("note", {"v": np.float64(0.5), "n": np.int64(3)}, float("inf"), note="x")
    rec = r.to_record("abc", 7)
    assert rec["lemma"] == "note"
    assert rec["lhs"] == "inf"
    assert rec["inputs"] == {"v": 0.5, "n": 3}
    assert rec["note"] == "x"
    assert len(rec["inputs_digest"]) == 12
    assert jsonable((np.arange(2), np.bool_(True))) == [[0, 1], True]
    json.dumps(rec)


def test_summarize():
    reports = [CheckReport.inequality("a", {}, 0.0, 1.0), CheckReport.inequality("a", {}, 2.0, 1.0),
               CheckReport.info("b", {}, 1.0)]
    s = summarize(reports)
    assert s["reports"] == 3
    assert s["failures"] == 1
    assert s["checks"] == {"a": {"total": 2, "failed": 1, "info": 0}, "b": {"total": 1, "failed": 0, "info": 1}}


def test_writers_round_trip(tmp_path):
    reports = [CheckReport.inequality("a", {"k": i}, float(i), 2.0) for i in range(4)]
    path = tmp_path / "reports.jsonl"
    assert write_jsonl(path, (r.to_record("s", 1) for r in reports)) == 4
    other = tmp_path / "other.jsonl"
    write_jsonl(other, (r.to_record("s", 1) for r in reports[:3]))
    assert compare(load(path), load(path), 0.0) == []
    assert len(compare(load(path), load(other), 0.0)) == 1
    n = write_trace_csv(tmp_path / "trace.csv", ["x", "y"], [[0.1, "a"], [np.float64(2.5), 3]])
    assert n == 2
    assert (tmp_path / "trace.csv").read_text().splitlines() == ["x,y", "0.1,a", "2.5,3"]
    write_json(tmp_path / "s.json", {"v": float("nan")})
    assert json.loads((tmp_path / "s.json").read_text()) == {"v": "nan"}


@pytest.mark.parametrize("exc,code", [
    (ConfigError("bad"), 2),
    (BudgetError(10, 1), 2),
    (ConditioningError("singular"), 2),
    (DivergenceError("overflow"), 3),
    (DomainError("domain"), 4),
    (AlignmentError("off node"), 4),
    (AccuracyError("series"), 4),
    (FracGameError("other"), 1),
])
def test_exit_codes(exc, code):
    assert exit_code_for(exc) == code
