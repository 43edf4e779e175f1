"""Acceptance criteria 1-11, one test each.

Each test prints a ``PASS criterion k: ...`` or ``FAIL criterion k: ...`` line;
the lines are repeated in the terminal summary.  Criteria 8 and 9 run Monte
Carlo ensembles and take several minutes.
"""

from __future__ import annotations

import pytest

from mixhj import suites

from .conftest import ACCEPTANCE_LINES

# wall-clock budgets in seconds
BUDGET = {1: 60, 2: 10, 3: 300, 4: 10, 5: 10, 6: 120, 7: 600, 8: 600, 9: 1800, 10: 60, 11: 300}
SLOW = {8, 9}


@pytest.mark.parametrize(
    "number",
    [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k for k in sorted(suites.CRITERIA)],
    ids=lambda k: f"criterion_{k}",
)
def test_criterion(number):
    res = suites.CRITERIA[number]()
    line = f"{res.line()} ({res.seconds:.1f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    print(res.to_dict()["metrics"])
    assert res.passed, res.metrics
    assert res.seconds < BUDGET[number], f"took {res.seconds:.1f} s, budget {BUDGET[number]} s"
