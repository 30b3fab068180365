"""Shared pytest plumbing: the acceptance-criteria summary block."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL summary line and assert the outcome."""

    def check(name, passed, detail, elapsed, limit):
        ok = passed and elapsed < limit
        line = f"{'PASS' if ok else 'FAIL'}: {name} [{detail}; {elapsed:.2f}s, limit {limit:.0f}s]"
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
