"""Structured verification results and their JSON/CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .dyadic import Box, DyadicCube

__all__ = ["StepCheck", "VerifyReport", "jsonable", "dumps", "rows_to_csv", "SCHEMA", "SCHEMA_VERSION"]

SCHEMA = "onesided-report"
SCHEMA_VERSION = 1


@dataclass
class StepCheck:
    """One verified inequality (or predicate); ``lhs <= rhs`` style where meaningful."""

    name: str
    passed: bool
    lhs: float | None = None
    rhs: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def slack(self) -> float | None:
        if self.lhs is None or self.rhs is None:
            return None
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "lhs": self.lhs,
                "rhs": self.rhs, "slack": self.slack, "detail": self.detail}


@dataclass
class VerifyReport:
    tag: str
    passed: bool
    instance: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    steps: list[StepCheck] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    witness: dict | None = None
    seed: int | None = None
    finding: bool = False  # a certificate failed on an input that met its hypotheses

    @property
    def max_ratio(self) -> float:
        rs = [r["ratio"] for r in self.rows if r.get("ratio") is not None]
        return max(rs) if rs else 0.0

    def step(self, name: str) -> StepCheck:
        for s in self.steps:
            if s.name == name:
                return s
        raise KeyError(name)

    def failed_steps(self) -> list[str]:
        return [s.name for s in self.steps if not s.passed]

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "passed": self.passed,
            "finding": self.finding,
            "seed": self.seed,
            "instance": self.instance,
            "constants": self.constants,
            "rows": self.rows,
            "steps": [s.to_dict() for s in self.steps],
            "witness": self.witness,
        }


def _float(x: float):
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def jsonable(obj: Any) -> Any:
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, DyadicCube):
        return {"level": obj.level, "anchor": list(obj.anchor)}
    if isinstance(obj, Box):
        return {"lower": [str(c) for c in obj.lower], "upper": [str(c) for c in obj.upper]}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        out = []
        for c in columns:
            v = r.get(c)
            if isinstance(v, float):
                v = repr(v) if math.isfinite(v) else _float(v)
            out.append("" if v is None else v)
        wr.writerow(out)
    return buf.getvalue()
