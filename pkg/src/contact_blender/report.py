"""Report records, JSON/CSV serialisation and the exit-code contract."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA = "contact-blender-report/1"
PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
VERDICTS = (PASS, FAIL, INCONCLUSIVE)
CSV_COLUMNS = ("r", "m_r", "axiom_a_margin", "axiom_b_margin", "axiom_c_margin", "axiom_d_margin",
               "axiom_e_margin", "axiom_f_margin", "distinctive_pass_rate")


def plain(v):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.ndarray):
        return [plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): plain(x) for k, x in v.items()}
    if v is None or isinstance(v, str):
        return v
    return str(v)


@dataclass
class Record:
    name: str
    anchor: str
    verdict: str
    margin: float | None = None
    witness: object = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    def to_dict(self):
        return {"name": self.name, "anchor": self.anchor, "verdict": self.verdict,
                "margin": plain(self.margin), "witness": plain(self.witness),
                "details": plain(self.details)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["anchor"], d["verdict"], d.get("margin"), d.get("witness"), d.get("details", {}))


def verdict_of(ok):
    return PASS if ok else FAIL


@dataclass
class Report:
    config: dict
    suites: dict = field(default_factory=dict)  # suite -> list[Record]
    sweep: list = field(default_factory=list)  # rows keyed by CSV_COLUMNS
    schema: str = SCHEMA

    def add(self, suite, records):
        self.suites.setdefault(suite, []).extend(records)

    def records(self):
        return [rec for recs in self.suites.values() for rec in recs]

    def counts(self):
        out = {v: 0 for v in VERDICTS}
        for rec in self.records():
            out[rec.verdict] += 1
        return out

    @property
    def verdict(self):
        c = self.counts()
        if c[FAIL]:
            return FAIL
        if c[INCONCLUSIVE]:
            return INCONCLUSIVE
        return PASS

    @property
    def exit_code(self):
        return {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}[self.verdict]

    def to_dict(self):
        return {
            "schema": self.schema,
            "config": plain(self.config),
            "suites": {s: [r.to_dict() for r in recs] for s, recs in self.suites.items()},
            "sweep": [plain(row) for row in self.sweep],
            "summary": {"verdict": self.verdict, "counts": self.counts()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        rep = cls(d["config"], schema=d["schema"], sweep=d.get("sweep", []))
        for s, recs in d["suites"].items():
            rep.add(s, [Record.from_dict(x) for x in recs])
        return rep

    def to_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.sweep:
            w.writerow({k: plain(row.get(k)) for k in CSV_COLUMNS})
        return buf.getvalue()

    def summary_lines(self):
        lines = []
        for suite, recs in self.suites.items():
            for rec in recs:
                m = "" if rec.margin is None else f"  margin={plain(rec.margin)}"
                lines.append(f"{rec.verdict.upper():13s} {rec.name}{m}")
        c = self.counts()
        lines.append(f"overall: {self.verdict} ({c[PASS]} pass, {c[FAIL]} fail, {c[INCONCLUSIVE]} inconclusive)")
        return lines
