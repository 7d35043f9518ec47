from __future__ import annotations

import pytest

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(number: int, title: str, passed: bool, details: str) -> None:
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number}: {status}  {title} | {details}"
        lines[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
