"""Shared pytest wiring for the acceptance scoreboard.

The acceptance tests each report a single verdict line; replaying the
collected lines in the terminal summary keeps the scoreboard visible
even when output capture is on.
"""

import pytest

_SCOREBOARD: list[str] = []


@pytest.fixture
def scoreboard():
    def record(line: str) -> None:
        _SCOREBOARD.append(line)
        print(line, flush=True)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _SCOREBOARD:
        terminalreporter.section("acceptance scoreboard")
        for line in _SCOREBOARD:
            terminalreporter.write_line(line)
