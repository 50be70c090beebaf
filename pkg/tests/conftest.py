import math

import pytest

from hardygauge import Exponents, Interval, Power, Scenario, make_grid


@pytest.fixture(scope="session")
def convex_anchor():
    """p = q = 2, v = 1, w = t^-2 on (0, inf): A_eps = eps^-1/2, Muckenhoupt = 1, C = 2."""
    iv = Interval(0.0, math.inf)
    return Scenario(iv, Power(1.0, 0.0), Power(1.0, -2.0), Exponents(2.0, 2.0))


@pytest.fixture(scope="session")
def convex_grid(convex_anchor):
    return make_grid(convex_anchor.interval, 4096, "log", 1e-6, 1e6)


@pytest.fixture(scope="session")
def nonconvex_anchor():
    """p = 2, q = 1, v = w = 1 on (0, 1): C = 3^-1/2."""
    iv = Interval(0.0, 1.0)
    return Scenario(iv, Power(1.0, 0.0), Power(1.0, 0.0), Exponents(2.0, 1.0))


@pytest.fixture(scope="session")
def nonconvex_grid(nonconvex_anchor):
    return make_grid(nonconvex_anchor.interval, 2048)


@pytest.fixture(scope="session")
def p1_scenario():
    iv = Interval(0.0, 1.0)
    return Scenario(iv, Power(1.0, 0.0), Power(1.0, 0.0), Exponents(1.0, 1.0))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
