"""The full acceptance matrix at its stated scale and tolerances.

Each criterion prints one PASS/FAIL line; the lines are repeated in the
terminal summary so they show up without ``-s``.
"""

import time

import pytest

from tingley_lab.acceptance import CRITERIA, AcceptanceRun

ACCEPTANCE_LINES: list[str] = []
WALL_CLOCK_LIMIT = 60.0


@pytest.fixture(scope="module")
def run():
    state = AcceptanceRun(seed=0)
    state.started = time.perf_counter()
    return state


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_criterion(run, criterion):
    result = criterion(run)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line


def test_whole_matrix_within_time_budget(run):
    elapsed = time.perf_counter() - run.started
    line = f"[{'PASS' if elapsed < WALL_CLOCK_LIMIT else 'FAIL'}] matrix wall clock {elapsed:.2f}s (limit {WALL_CLOCK_LIMIT:.0f}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert elapsed < WALL_CLOCK_LIMIT
