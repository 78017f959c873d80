"""Acceptance table for the Minifab study, one test per criterion.

Every check runs at its stated tolerance.  The per-check lines are printed
in the terminal summary whether or not they pass.
"""

from __future__ import annotations

import pytest

from fabsched.reproduce import run_checks

CRITERIA = {
    1: "makespan optima for 5 and 15 wafers",
    2: "single-wafer critical path",
    3: "fixed-throughput energy bounds",
    4: "variable throughput sweep",
    5: "weighted-sum sensitivity",
    6: "throughput and energy slopes",
    7: "dynamic switching",
    8: "FIFO study",
    9: "oracle equivalence",
    10: "verifier invariants",
}


@pytest.fixture(scope="module")
def results(acceptance_lines):
    checks = run_checks()
    lines = acceptance_lines
    for n, title in CRITERIA.items():
        mine = [c for c in checks if c.criterion == n]
        ok = bool(mine) and all(c.passed for c in mine)
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title}")
        lines.extend(f"    {c.line()}" for c in mine)
    return checks


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(results, criterion):
    mine = [c for c in results if c.criterion == criterion]
    assert mine, f"no checks ran for criterion {criterion}"
    failed = [c.line() for c in mine if not c.passed]
    assert not failed, "\n".join(failed)
