"""The twelve acceptance criteria, one test each, at their stated tolerances.

Each test prints a PASS/FAIL line with the measured figures; the lines are
also collected into a summary section at the end of the run.
"""

import pytest

from wetting import checks

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("check", checks.ALL_CHECKS, ids=[f.__name__ for f in checks.ALL_CHECKS])
def test_criterion(check):
    result = check()
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
    assert result.within_time, f"too slow: {result.elapsed:.1f}s > {result.time_limit}s"
