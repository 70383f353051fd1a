"""Acceptance gate: every exit criterion at its stated tolerance and time budget.

One PASS/FAIL line per criterion is printed in the pytest terminal summary.
"""
import pytest

from conftest import ACCEPTANCE_LINES
from pdoubling import acceptance


@pytest.mark.parametrize("name", list(acceptance.CRITERIA) + list(acceptance.AUDITS))
def test_criterion(name):
    fn = {**acceptance.CRITERIA, **acceptance.AUDITS}[name]
    result = fn()
    ACCEPTANCE_LINES.append(result.line())
    assert result.passed, result.detail
    assert result.within_budget, f"{result.seconds:.2f}s > {result.budget}s"


def test_tampered_grid_breaks_exactness_but_not_coverage():
    assert not acceptance.one_dim_window(tamper="grid").passed
    assert acceptance.coverage_audit(tamper="grid").passed


def test_tampered_count_breaks_sandwich():
    assert not acceptance.sandwich_consistency(tamper="count").passed
