"""Shared fixtures: the acceptance-criterion reporter.

Each acceptance test records exactly one verdict line; the terminal summary
prints them after the run so the pass/fail status of every criterion is
visible in one block regardless of capture settings.
"""

import pytest

_criterion_lines = []


@pytest.fixture
def criterion():
    """Recorder: criterion(number, ok, detail). Call before asserting."""

    def record(number: int, ok: bool, detail: str) -> None:
        _criterion_lines.append((number, "PASS" if ok else "FAIL", detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(_criterion_lines):
        terminalreporter.write_line(f"criterion {number}: {verdict} — {detail}")
