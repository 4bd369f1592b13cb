"""Results document: checks with their tolerances, artifacts, timing."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

COMPARISONS = ("abs", "rel", "le", "ge", "lt", "gt", "in", "true")


@dataclass
class Check:
    """One numeric acceptance entry.

    ``comparison`` decides how ``value`` meets ``reference`` and ``tolerance``:
    abs/rel are deviations, le/ge/lt/gt compare against ``reference`` itself,
    ``in`` accepts ``reference - tolerance <= value <= reference + tolerance``
    and ``true`` is a boolean property (value 1 or 0).
    """
    criterion: int
    name: str
    value: float
    reference: float
    tolerance: float
    comparison: str
    note: str = ""
    informational: bool = False

    def __post_init__(self):
        if self.comparison not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.comparison!r}")
        self.value = float(self.value)
        self.reference = float(self.reference)
        self.tolerance = float(self.tolerance)

    @property
    def passed(self) -> bool:
        v, r, tol = self.value, self.reference, self.tolerance
        if not math.isfinite(v):
            return False
        if self.comparison == "abs":
            return abs(v - r) <= tol
        if self.comparison == "rel":
            return abs(v - r) <= tol * abs(r)
        if self.comparison == "le":
            return v <= r
        if self.comparison == "ge":
            return v >= r
        if self.comparison == "lt":
            return v < r
        if self.comparison == "gt":
            return v > r
        if self.comparison == "in":
            return r - tol <= v <= r + tol
        return v == 1.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.informational:
            status = "INFO"
        sym = {"abs": "+-", "rel": "+-rel", "le": "<=", "ge": ">=", "lt": "<", "gt": ">",
               "in": "in +-", "true": "=="}[self.comparison]
        tol = "" if self.comparison in ("le", "ge", "lt", "gt", "true") else f" {self.tolerance:.3g}"
        return f"[{status}] criterion {self.criterion}: {self.name} = {self.value:.6g} ({sym} {self.reference:.6g}{tol})"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        for k in ("value", "reference", "tolerance"):
            if not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d


@dataclass
class Timing:
    criterion: int | str
    seconds: float
    budget: float | None = None

    @property
    def passed(self) -> bool:
        return self.budget is None or self.seconds < self.budget


@dataclass
class Report:
    command: str
    config: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    timing: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    runtime: dict = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks):
        for c in checks:
            self.add(c)

    def artifact(self, path, kind: str, description: str = "", root: Path | None = None) -> Path:
        p = Path(path)
        rel = str(p.relative_to(root)) if root is not None else str(p)
        self.artifacts.append({"path": rel, "kind": kind, "description": description})
        return p

    @property
    def hard_failures(self) -> list:
        return [c for c in self.checks if not c.informational and not c.passed]

    @property
    def budget_failures(self) -> list:
        return [t for t in self.timing if not t.passed]

    @property
    def passed(self) -> bool:
        return not self.hard_failures and not self.budget_failures

    def by_criterion(self) -> dict:
        out: dict = {}
        for c in self.checks:
            out.setdefault(c.criterion, []).append(c)
        return out

    def criterion_passed(self, n: int) -> bool:
        graded = [c for c in self.by_criterion().get(n, []) if not c.informational]
        budget = [t for t in self.timing if t.criterion == n]
        return bool(graded) and all(c.passed for c in graded) and all(t.passed for t in budget)

    def as_dict(self, timing: bool = True) -> dict:
        d = {"command": self.command, "config": self.config,
             "checks": [c.as_dict() for c in self.checks],
             "criteria": {str(n): self.criterion_passed(n) for n in sorted(self.by_criterion())},
             "results": _jsonable(self.results), "artifacts": self.artifacts,
             "notes": self.notes, "passed": not self.hard_failures}
        if timing:
            d["timing"] = [{"criterion": t.criterion, "seconds": round(t.seconds, 3),
                            "budget": t.budget, "passed": t.passed} for t in self.timing]
            d["runtime"] = _jsonable(self.runtime)
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.as_dict(timing), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"mvpb {self.command}"]
        lines += [c.line() for c in self.checks]
        for t in self.timing:
            b = f" (budget {t.budget:.0f} s)" if t.budget else ""
            who = f"criterion {t.criterion}" if isinstance(t.criterion, int) else t.criterion
            lines.append(f"[{'PASS' if t.passed else 'FAIL'}] {who}: runtime {t.seconds:.1f} s{b}")
        lines += [f"note: {n}" for n in self.notes]
        crit = self.by_criterion()
        if crit:
            ok = [n for n in sorted(crit) if self.criterion_passed(n)]
            bad = [n for n in sorted(crit) if not self.criterion_passed(n)]
            lines.append(f"criteria passed: {ok}; failed: {bad}")
        return "\n".join(lines)

    def write(self, directory: Path) -> tuple[Path, Path]:
        directory.mkdir(parents=True, exist_ok=True)
        js = directory / f"{self.command}-report.json"
        txt = directory / f"{self.command}-summary.txt"
        js.write_text(self.to_json() + "\n")
        txt.write_text(self.summary() + "\n")
        return js, txt


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item) and getattr(x, "ndim", 1) == 0:
        x = x.item()
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def write_csv(path, header, rows, fmt: str = "%.12g") -> Path:
    """CSV with a schema header; floats rendered with a fixed format for byte stability."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt % v if isinstance(v, float) else v for v in row])
    return path
