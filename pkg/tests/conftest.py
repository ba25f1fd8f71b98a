from fractions import Fraction

import pytest

from cmgraphs.degrees import DegreeDistribution


@pytest.fixture
def d13():
    return DegreeDistribution({1: Fraction(1, 2), 3: Fraction(1, 2)})


@pytest.fixture
def d12():
    return DegreeDistribution({1: Fraction(1, 2), 2: Fraction(1, 2)})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
