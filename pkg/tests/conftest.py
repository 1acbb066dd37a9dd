"""Collects the acceptance verdicts and prints one line per criterion at the end of the run."""

import re

import pytest

VERDICTS = {}


@pytest.fixture
def verdict(request):
    """Call ``verdict(criterion, ok, detail)`` once per criterion; it also asserts."""

    def record(criterion, ok, detail=""):
        VERDICTS[criterion] = (bool(ok), detail)
        assert ok, f"criterion {criterion} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS, key=lambda s: (int(re.match(r"\d+", s).group()), s)):
        ok, detail = VERDICTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
