import pytest

from glshrink.kernels import horseshoe, inverse_gamma_kernel, strawderman_berger, tpbn_kernel


@pytest.fixture(scope="session")
def hs():
    return horseshoe()


@pytest.fixture(scope="session")
def sb():
    return strawderman_berger()


@pytest.fixture(scope="session")
def ig():
    return inverse_gamma_kernel(0.5)


@pytest.fixture(scope="session")
def tpbn11():
    return tpbn_kernel(1.0, 1.0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
