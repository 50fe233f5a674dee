"""Worked examples with expected verdicts, stored as problem files."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources

from ..analysis import ALL_CHECKS, run_checks
from ..problem import ProblemInstance, SchemaError, load_problem
from ..regularity import SamplerConfig

# expected-key -> check name
CHECK_OF = {k: k for k in ALL_CHECKS}


@dataclass
class CatalogEntry:
    id: str
    problem: ProblemInstance
    expected: dict
    title: str = ""
    note: str = ""


def data_files():
    root = resources.files(__package__) / "data"
    return sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def load_catalog() -> list[CatalogEntry]:
    out = []
    for path in data_files():
        text = path.read_text(encoding="utf-8")
        try:
            p = load_problem(text, entry=path.name)
        except SchemaError as e:
            raise SchemaError(str(e).split(": ", 1)[-1], path.name.removesuffix(".json")) from None
        out.append(CatalogEntry(p.id, p, dict(p.expected), p.title, p.note))
    return out


def select(entries, pattern: str | None):
    if not pattern:
        return list(entries)
    pat = pattern.lower()
    return [e for e in entries if pat in e.id.lower() or pat in e.title.lower()]


@dataclass
class EntryReport:
    id: str
    title: str
    values: dict
    comparisons: list = field(default_factory=list)   # (key, expected, got, status)
    seconds: float = 0.0

    @property
    def hard(self):
        return sum(1 for c in self.comparisons if c[3] == "hard")

    @property
    def soft(self):
        return sum(1 for c in self.comparisons if c[3] == "soft")

    def to_json(self):
        return {"id": self.id, "title": self.title, "values": dict(sorted(self.values.items())),
                "comparisons": [{"key": k, "expected": e, "got": g, "status": s} for k, e, g, s in self.comparisons]}


@dataclass
class CatalogReport:
    entries: list
    consistency: list

    @property
    def hard_failures(self):
        return sum(e.hard for e in self.entries) + len(self.consistency)

    @property
    def soft_failures(self):
        return sum(e.soft for e in self.entries)

    def to_json(self):
        return {"entries": [e.to_json() for e in self.entries], "consistency_violations": self.consistency,
                "hard_failures": self.hard_failures, "soft_failures": self.soft_failures}


def compare(expected: str, got: str) -> str:
    if got == expected:
        return "pass"
    if got == "Unknown":
        return "soft"
    return "hard"


def consistency_violations(entry_id, v: dict) -> list[str]:
    """Implications between the verdicts that must hold on every instance."""
    out = []
    am = v.get("am_stat") == "Certified"
    if am and v.get("am_reg") == "Proved" and v.get("m_stat") == "Refuted":
        out.append(f"{entry_id}: AM-stationary and AM-regular but not M-stationary")
    if v.get("m_stat") == "Proved" and v.get("am_stat") == "Refuted":
        out.append(f"{entry_id}: M-stationary but AM-stationarity refuted")
    if am and v.get("m_stat") == "Refuted" and v.get("fjm") == "Refuted":
        out.append(f"{entry_id}: AM-stationary but not FJM-stationary")
    if v.get("nnamcq") == "true" and v.get("am_reg") == "Refuted":
        out.append(f"{entry_id}: NNAMCQ holds but AM-regularity refuted")
    if v.get("nnamcq") == "true" and v.get("fjm") == "Proved":
        out.append(f"{entry_id}: NNAMCQ and an abnormal multiplier together")
    if v.get("polyhedral") == "true" and v.get("am_reg") != "Proved":
        out.append(f"{entry_id}: polyhedral but AM-regularity not proved")
    if v.get("preimage") == "Violated" and v.get("am_reg") == "Proved":
        out.append(f"{entry_id}: pre-image rule violated at an AM-regular point")
    return out


def evaluate_entry(e: CatalogEntry, cfg: SamplerConfig | None = None, checks=None) -> EntryReport:
    t = time.perf_counter()
    keys = checks or [k for k in ALL_CHECKS if k != "feasible"]
    secs = run_checks(e.problem, keys, cfg=cfg)
    values = {s.check: s.value for s in secs}
    rep = EntryReport(e.id, e.title, values)
    for key, exp in sorted(e.expected.items()):
        got = values.get(CHECK_OF[key], "Unknown")
        rep.comparisons.append((key, exp, got, compare(exp, got)))
    rep.seconds = time.perf_counter() - t
    return rep


def run_catalog(filter: str | None = None, cfg: SamplerConfig | None = None) -> CatalogReport:
    reports, viol = [], []
    for e in select(load_catalog(), filter):
        r = evaluate_entry(e, cfg)
        reports.append(r)
        viol += consistency_violations(e.id, r.values)
    return CatalogReport(reports, viol)


def catalog_table(rep: CatalogReport) -> str:
    lines = []
    for e in rep.entries:
        status = "ok" if not e.hard and not e.soft else f"{e.hard} hard, {e.soft} soft"
        lines.append(f"{e.id:32s} {status:14s} {e.seconds:6.2f}s")
        for k, exp, got, s in e.comparisons:
            mark = {"pass": " ", "soft": "?", "hard": "!"}[s]
            lines.append(f"  {mark} {k:15s} expected {exp:12s} got {got}")
    for v in rep.consistency:
        lines.append(f"consistency: {v}")
    lines.append(f"{len(rep.entries)} entries, {rep.hard_failures} hard failures, {rep.soft_failures} soft failures")
    return "\n".join(lines)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False)
