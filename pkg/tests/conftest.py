import pytest

from patternclt.patterns import parse_pattern

CONST3 = "r=3; 0:123,231,312; 1:123,231,312; 2:123,231,312"

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ud():
    return parse_pattern("UD")


@pytest.fixture(scope="session")
def const3():
    return parse_pattern(CONST3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
