from __future__ import annotations

import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the lines are echoed in the terminal summary."""
    lines = request.config.stash[_LINES_KEY]

    def record(number: int, title: str, ok: bool, elapsed: float, detail: str = "") -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'} ({elapsed:.2f} s) {title}"
        if detail:
            line += f": {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
