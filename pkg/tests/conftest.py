import numpy as np
import pytest

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def werner_rho(f):
    """Werner state built directly from |Phi+> and the identity."""
    proj = np.outer(PHI_PLUS, PHI_PLUS.conj())
    return f * proj + (1 - f) / 3 * (np.eye(4) - proj)


def expect(rho, op):
    return float(np.real(np.trace(rho @ op)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
