import time
from dataclasses import dataclass, field

import pytest

ACCEPTANCE = {}


@dataclass
class Criterion:
    ident: str
    title: str
    limit_s: float
    measures: list = field(default_factory=list)
    runtime: float | None = None
    finished: bool = False

    @property
    def passed(self) -> bool:
        in_time = self.runtime is not None and self.runtime < self.limit_s
        return self.finished and in_time and all(ok for _, _, ok in self.measures)


class Recorder:
    def __init__(self):
        self.current = None
        self._t0 = None

    def start(self, ident, title, limit_s):
        self.current = ACCEPTANCE[ident] = Criterion(ident, title, limit_s)
        self._t0 = time.perf_counter()
        return self

    def measure(self, name, value, ok):
        self.current.measures.append((name, value, bool(ok)))
        return bool(ok)

    def finish(self):
        c = self.current
        c.runtime = time.perf_counter() - self._t0
        c.finished = True
        return c


@pytest.fixture
def acceptance():
    return Recorder()


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".3g")
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for ident in sorted(ACCEPTANCE, key=lambda s: int(s[2:])):
        c = ACCEPTANCE[ident]
        detail = "; ".join(f"{n}={_fmt(v)}" for n, v, _ in c.measures)
        rt = "n/a" if c.runtime is None else f"{c.runtime:.2f}s<{c.limit_s:g}s"
        tr.write_line(f"[{'PASS' if c.passed else 'FAIL'}] {ident} {c.title} ({rt}) {detail}")
