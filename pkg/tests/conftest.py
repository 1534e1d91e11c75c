import numpy as np
import pytest

from debond import BoundaryDrive, ConstantProfile, build_grid, interval_mask, toughness_from_profile


def line(L=1.0, h=0.01, gamma="left"):
    return build_grid("interval", L, h, gamma)


def line_problem(h=1 / 400, ell0=0.1, kappa=0.5, T=0.8, rate=1.0, L=1.0):
    g = line(L, h)
    a0 = interval_mask(g, ell0)
    k = toughness_from_profile(g, ConstantProfile(kappa), a0)
    d = BoundaryDrive.uniform(g, [0.0, T], [0.0, rate * T])
    return g, k, a0, d


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line_ in sorted(ACCEPTANCE):
            terminalreporter.write_line(line_)
