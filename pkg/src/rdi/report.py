"""Check reports: the unit of output of every verification."""
from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if hasattr(v, "tolist"):
        return _plain(v.tolist())
    if isinstance(v, (list, tuple)):
        return [_plain(a) for a in v]
    if isinstance(v, bool) or v is None:
        return v
    return float(v)


@dataclass
class CheckReport:
    """Outcome of one named check.

    ``passed`` is derived, never set independently: a check passes exactly
    when ``abs_err <= tol`` (a NaN error never passes).
    """

    name: str
    paper_ref: str
    value: object
    oracle: object
    abs_err: float
    tol: float
    ms: float = 0.0
    note: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.value = _plain(self.value)
        self.oracle = _plain(self.oracle)
        self.abs_err = float(self.abs_err)
        self.tol = float(self.tol)
        self.passed = bool(self.abs_err <= self.tol)

    @classmethod
    def failure(cls, name: str, ref: str, message: str) -> "CheckReport":
        """A check that could not be evaluated (precondition or domain failure)."""
        return cls(name, ref, math.nan, math.nan, math.inf, 0.0, note=message)

    @classmethod
    def at_least(cls, name, ref, value, threshold, **kw) -> "CheckReport":
        """A check asserting ``value >= threshold`` (negative controls).

        Encoded as a shortfall so that ``pass ⇔ abs_err ≤ tol`` still holds:
        ``abs_err = max(0, threshold − value)`` with ``tol = 0``.
        """
        err = max(0.0, threshold - float(value)) if math.isfinite(value) else math.inf
        return cls(name, ref, value, threshold, err, 0.0, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        if not d["note"]:
            d.pop("note")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        rep = cls(d["name"], d["paper_ref"], d["value"], d["oracle"], d["abs_err"], d["tol"],
                  ms=d.get("ms", 0.0), note=d.get("note", ""))
        if rep.passed != d["pass"]:
            raise ValueError(f"inconsistent pass flag in report {d['name']!r}")
        return rep


@contextmanager
def timed():
    """Yields a one-element list that receives the elapsed milliseconds."""
    box = [0.0]
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = (time.perf_counter() - t0) * 1e3


def scenario_document(scenario: str, checks) -> dict:
    return {"scenario": scenario, "checks": [c.to_dict() for c in checks]}


def dumps(documents, indent: int = 2) -> str:
    return json.dumps(documents, indent=indent, sort_keys=False)


def _fmt(v) -> str:
    if isinstance(v, list):
        if len(v) > 4:
            return f"[{len(v)} values]"
        return "[" + ", ".join(_fmt(a) for a in v) + "]"
    if v is None:
        return "-"
    return f"{v:.10g}"


def to_markdown(documents) -> str:
    lines = []
    for doc in documents:
        n_pass = sum(c["pass"] for c in doc["checks"])
        lines.append(f"## {doc['scenario']} ({n_pass}/{len(doc['checks'])} passed)")
        lines.append("")
        lines.append("| check | reference | value | oracle | abs_err | tol | pass |")
        lines.append("|---|---|---|---|---|---|---|")
        for c in doc["checks"]:
            lines.append(
                f"| {c['name']} | {c['paper_ref']} | {_fmt(c['value'])} | {_fmt(c['oracle'])} "
                f"| {c['abs_err']:.3e} | {c['tol']:.1e} | {'yes' if c['pass'] else 'NO'} |")
        lines.append("")
    return "\n".join(lines)
