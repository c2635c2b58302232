import pytest

from wpt_adaptive.circuit import TABLE1

# (criterion, passed, detail) appended by test_acceptance
ACCEPTANCE_RESULTS = []


@pytest.fixture
def table1():
    return TABLE1


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
