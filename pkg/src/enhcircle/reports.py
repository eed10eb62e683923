"""Check records, run reports and deterministic CSV/JSON writers."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    name: str
    measured: float
    expected: object
    tolerance: object
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


def below(name: str, measured: float, tol: float) -> Check:
    """``measured < tol`` with ``expected = 0``."""
    return Check(name, float(measured), 0.0, tol, bool(measured < tol))


def within(name: str, measured: float, lo: float, hi: float) -> Check:
    return Check(name, float(measured), [lo, hi], "interval", bool(lo <= measured <= hi))


@dataclass
class RunReport:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def to_dict(self) -> dict:
        # wall time stays out of data files so identical configs give identical bytes
        return {
            "command": self.command,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "results": self.results,
            "pass": self.passed,
        }

    def summary_lines(self):
        for c in self.checks:
            yield f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: measured={_fmt(c.measured)} tol={c.tolerance}"


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".6g")
    return str(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path: str, payload) -> None:
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def format_cell(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(x) for x in row) + "\n")


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path} is not writable")
