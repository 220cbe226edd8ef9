"""Collects acceptance outcomes and prints one line per criterion at the end."""

import pytest

CRITERIA = {
    1: "zero-noise correctness",
    2: "per-iteration invariant suite",
    3: "conditional low-error max-dislocation bound",
    4: "mean dislocation vs reference table (n=1024/2048)",
    5: "mean max dislocation / log n vs reference table",
    6: "flatness of mean dislocation in n",
    7: "quadratic comparison scaling",
    8: "swap-rate lower-bound consistency",
    9: "tail bound sweep pr_w(2 f log2 n) <= n^-3",
    10: "byte-identical rerun",
    "note": "measured values within closed-form upper bounds",
}

_results: dict = {}


class AcceptanceLog:
    def record(self, criterion, ok: bool, detail: str = ""):
        _results.setdefault(criterion, []).append((bool(ok), detail))


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key, name in CRITERIA.items():
        entries = _results.get(key)
        label = f"criterion {key}" if key != "note" else "note"
        if not entries:
            terminalreporter.write_line(f"{label:13s} NOT RUN  {name}")
            continue
        status = "PASS" if all(ok for ok, _ in entries) else "FAIL"
        details = "; ".join(d for _, d in entries if d)
        terminalreporter.write_line(f"{label:13s} {status:8s} {name}: {details}")
