"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

The lines are repeated in the pytest terminal summary.  Run
``python -m goperators.acceptance`` for the same report without pytest.
"""
import pytest

from goperators import acceptance

LINES = {}


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    r = acceptance.CRITERIA[number]()
    print(r.line())
    LINES[number] = r.line()
    assert r.metrics["within_budget"], f"criterion {number} exceeded its {r.budget:.0f}s budget"
    assert r.passed, f"criterion {number} failed: {r.metrics}"


def test_criteria_are_numbered_one_to_ten():
    assert sorted(acceptance.CRITERIA) == list(range(1, 11))
