"""Verification reports: human table and machine (JSON) form."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from . import __version__

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


@dataclass
class CheckRecord:
    id: str
    paper_tag: str
    statement: str
    status: str
    witness: Optional[str] = None
    note: str = ""
    elapsed_ms: float = 0.0


@dataclass
class VerificationReport:
    scenario: str
    seed: int
    checks: List[CheckRecord]
    config: dict = field(default_factory=dict)
    engine_version: str = __version__

    @property
    def ok(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def counts(self) -> dict:
        out = {PASS: 0, FAIL: 0, SKIPPED: 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    def to_dict(self, timing: bool = True) -> dict:
        checks = []
        for c in self.checks:
            d = asdict(c)
            if not timing:
                d.pop("elapsed_ms")
            checks.append(d)
        return {
            "engine_version": self.engine_version,
            "scenario": self.scenario,
            "seed": self.seed,
            "config": self.config,
            "checks": checks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(
            scenario=d["scenario"],
            seed=d["seed"],
            checks=[CheckRecord(**c) for c in d["checks"]],
            config=d.get("config", {}),
            engine_version=d.get("engine_version", __version__),
        )


def emit_report(report: VerificationReport, fmt: str = "human", timing: bool = True) -> str:
    if fmt == "machine":
        return json.dumps(report.to_dict(timing), indent=2, sort_keys=True) + "\n"
    if fmt != "human":
        raise ValueError(f"unknown format {fmt!r}")
    rows = [(c.id, c.paper_tag, c.status.upper(), f"{c.elapsed_ms:8.1f}") for c in report.checks]
    w_id = max([len(r[0]) for r in rows] + [5])
    w_tag = max([len(r[1]) for r in rows] + [3])
    lines = [
        f"scenario {report.scenario}  (seed {report.seed}, engine {report.engine_version})",
        f"{'check':<{w_id}}  {'tag':<{w_tag}}  {'status':<7}  {'ms':>8}",
        "-" * (w_id + w_tag + 23),
    ]
    for (cid, tag, status, ms), rec in zip(rows, report.checks):
        lines.append(f"{cid:<{w_id}}  {tag:<{w_tag}}  {status:<7}  {ms}")
        if rec.status == FAIL and rec.witness:
            lines.append(f"    witness: {rec.witness}")
        elif rec.status == SKIPPED and rec.note:
            lines.append(f"    skipped: {rec.note}")
    c = report.counts()
    lines.append("-" * (w_id + w_tag + 23))
    lines.append(f"{c[PASS]} passed, {c[FAIL]} failed, {c[SKIPPED]} skipped")
    return "\n".join(lines) + "\n"


def parse_machine_report(text: str) -> VerificationReport:
    return VerificationReport.from_dict(json.loads(text))
