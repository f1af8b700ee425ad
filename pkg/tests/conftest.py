import time

import pytest

SESSION_START = time.monotonic()
ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(config, items):
    # the suite wall-clock criterion must observe the whole run: move it last
    tail = [it for it in items if "suite_wall_clock" in it.name]
    rest = [it for it in items if "suite_wall_clock" not in it.name]
    items[:] = rest + tail


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    elapsed = time.monotonic() - SESSION_START
    terminalreporter.write_line(f"suite wall-clock: {elapsed:.1f}s")


@pytest.fixture(scope="session")
def session_start():
    return SESSION_START


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES
