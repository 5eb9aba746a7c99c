import numpy as np
import pytest
from scipy.linalg import logm

from cqcap.numerics import reset


@pytest.fixture(autouse=True)
def _fresh_tolerances():
    reset()
    yield
    reset()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def logm_entropy(rho):
    """Von Neumann entropy via the matrix logarithm (independent of eigh)."""
    rho = np.asarray(rho, dtype=complex)
    return float(-np.trace(rho @ logm(rho)).real / np.log(2))


def logm_relative_entropy(rho, sigma):
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    return float(np.trace(rho @ (logm(rho) - logm(sigma))).real / np.log(2))


# acceptance criteria append (name, passed, detail) here; the summary prints them
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
