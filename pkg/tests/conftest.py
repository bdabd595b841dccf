"""Shared fixtures; collects acceptance outcomes and prints one line per criterion."""

import pytest

_RESULTS_KEY = pytest.StashKey[dict]()
N_CRITERIA = 13


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


@pytest.fixture
def criterion(request):
    """``criterion(number, passed, detail)`` records an acceptance outcome and asserts it."""
    results = request.config.stash[_RESULTS_KEY]

    def record(number: int, passed: bool, detail: str) -> None:
        results[number] = (bool(passed), detail)
        print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_RESULTS_KEY]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, N_CRITERIA + 1):
        if number in results:
            passed, detail = results[number]
            terminalreporter.write_line(f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"CRITERION {number}: NOT RUN")
