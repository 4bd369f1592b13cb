import json
import math

import pytest

from mvpb.report import Check, Report, Timing, write_csv


@pytest.mark.parametrize("cmp,value,ref,tol,ok", [
    ("abs", 1.05, 1.0, 0.1, True), ("abs", 1.2, 1.0, 0.1, False),
    ("rel", 101.0, 100.0, 0.02, True), ("rel", 103.0, 100.0, 0.02, False),
    ("le", 1.0, 1.0, 0, True), ("lt", 1.0, 1.0, 0, False), ("gt", 2.0, 1.0, 0, True),
    ("ge", 0.5, 1.0, 0, False), ("in", -1.6, -1.5, 0.15, True), ("in", -1.3, -1.5, 0.15, False),
    ("true", 1.0, 1.0, 0, True), ("true", 0.0, 1.0, 0, False),
])
def test_comparisons(cmp, value, ref, tol, ok):
    assert Check(1, "x", value, ref, tol, cmp).passed is ok


def test_nan_fails_and_bad_comparison():
    assert not Check(1, "x", math.nan, 0.0, 1.0, "abs").passed
    with pytest.raises(ValueError):
        Check(1, "x", 0.0, 0.0, 0.0, "approx")


def test_report_json_and_grading(tmp_path):
    rep = Report("demo", config={"a": 1})
    rep.add(Check(2, "good", 1.0, 1.0, 0.1, "abs"))
    rep.add(Check(2, "info", 9.0, 1.0, 0.1, "abs", informational=True))
    rep.add(Check(3, "bad", 5.0, 1.0, 0.1, "abs"))
    rep.timing.append(Timing(2, 1.0, 10.0))
    d = json.loads(rep.to_json())
    assert d["criteria"] == {"2": True, "3": False}
    assert [c["tolerance"] for c in d["checks"]] == [0.1, 0.1, 0.1]
    assert "timing" in d and "timing" not in rep.as_dict(timing=False)
    assert not rep.passed and [c.name for c in rep.hard_failures] == ["bad"]
    js, txt = rep.write(tmp_path)
    summary = txt.read_text()
    assert "[INFO] criterion 2: info" in summary and "[FAIL] criterion 3: bad" in summary


def test_budget_failure():
    rep = Report("demo")
    rep.add(Check(1, "ok", 0.0, 0.0, 1.0, "abs"))
    rep.timing.append(Timing(1, 5.0, 2.0))
    assert not rep.criterion_passed(1) and not rep.passed


def test_csv_schema(tmp_path):
    p = write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    assert p.read_text() == "a,b\n1,0.1\n2,0.333333333333\n"
