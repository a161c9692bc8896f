import pytest

from aotkit.service import Constant, TwoPoint


@pytest.fixture
def const7():
    return Constant(7.0)


@pytest.fixture
def twopoint():
    return TwoPoint(1.0, 10.0, 0.5)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for crit in sorted(REPORT):
            for line in REPORT[crit]:
                terminalreporter.write_line(line)
