"""Suite reports: per-check statistics and sweep rows, with JSON and CSV forms."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field

#: units for known sweep columns; written into the CSV header as ``name [unit]``
UNITS = {
    "level": "fraction",
    "trial": "index",
    "angle": "rad",
    "delta": "1",
    "eps_a": "1",
    "eps_b": "1",
    "eps_a_hull": "1",
    "eps_b_hull": "1",
    "gap": "normalized measure",
    "mismatch": "normalized measure",
    "symdiff": "fraction of volume",
    "drift_a": "measure",
    "drift_b": "measure",
    "degraded": "bool",
    "frame_shear": "lattice slope",
    "error": "text",
}


@dataclass
class LemmaStats:
    """Aggregate outcome of one check over many inputs.

    ``worst_margin`` is the smallest observed slack (negative on failure);
    ``slack_used`` is the largest fraction of an allowed slack consumed.
    """

    exact: bool = True
    passed: int = 0
    failed: int = 0
    worst_margin: float | None = None
    slack_used: float = 0.0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, margin: float, slack_used: float = 0.0, detail: str = "") -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.failures) < 10:
                self.failures.append(detail)
        if margin is not None and not math.isnan(margin):
            self.worst_margin = margin if self.worst_margin is None else min(self.worst_margin, margin)
        self.slack_used = max(self.slack_used, slack_used)

    def to_dict(self) -> dict:
        wm = self.worst_margin
        return {
            "exact": self.exact,
            "passed": self.passed,
            "failed": self.failed,
            "worst_margin": None if wm is None or math.isinf(wm) else wm,
            "slack_used": self.slack_used,
            "failures": list(self.failures),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LemmaStats":
        return cls(d["exact"], d["passed"], d["failed"], d["worst_margin"], d["slack_used"],
                   list(d.get("failures", [])))


@dataclass
class SuiteReport:
    name: str
    config: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def check(self, name: str, exact: bool = True) -> LemmaStats:
        if name not in self.checks:
            self.checks[name] = LemmaStats(exact=exact)
        return self.checks[name]

    @property
    def ok(self) -> bool:
        return all(s.failed == 0 for s in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "config": self.config,
            "checks": {k: v.to_dict() for k, v in sorted(self.checks.items())},
            "rows": self.rows,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteReport":
        return cls(d["name"], d.get("config", {}),
                   {k: LemmaStats.from_dict(v) for k, v in d.get("checks", {}).items()},
                   list(d.get("rows", [])), d.get("summary", {}))

    @classmethod
    def from_json(cls, text: str) -> "SuiteReport":
        return cls.from_dict(json.loads(text))

    # -- CSV ---------------------------------------------------------------

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self) -> str:
        cols = self.columns()
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{c} [{UNITS.get(c, '1')}]" for c in cols])
        for row in self.rows:
            w.writerow([_cell(row.get(c)) for c in cols])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "sweep") -> "SuiteReport":
        reader = csv.reader(_io.StringIO(text))
        header = next(reader)
        cols = [h.split(" [", 1)[0] for h in header]
        rows = [{c: _parse(v) for c, v in zip(cols, rec)} for rec in reader if rec]
        return cls(name, rows=rows)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return str(v)


def _parse(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s
