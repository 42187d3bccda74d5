"""Shared fixtures and independent oracles.

The frozen numbers below were produced by a separate script that builds each
layer matrix as ``scipy.linalg.expm`` of the first-order system matrix and
locates roots with ``scipy.optimize.brentq`` on 10^4-point scans.  None of it
goes through the package.
"""


import numpy as np
import pytest
from scipy.linalg import expm

from floquet_defect import validate_crystal

GOLDEN_CELL = [(0.5, 4.0), (0.5, 1.0)]
GOLDEN_DEFECT = (0.8, [(0.8, 2.25)])

# first two gaps at normal incidence, E||
GAP1 = (1.6821373411358604, 2.461918834681549)
GAP2 = (3.821266472498037, 4.601047966043727)
# defect modes (one per gap) and the decaying multiplier at the first
K0 = 1.841797668228935
K0_GAP2 = 4.112369817746583
MU0 = -0.6145896343154684


@pytest.fixture(scope="session")
def golden():
    return validate_crystal(GOLDEN_CELL, GOLDEN_DEFECT)


@pytest.fixture(scope="session")
def vacuum():
    return validate_crystal([(1.0, 1.0)], (0.5, [(0.5, 1.0)]))


@pytest.fixture(scope="session")
def period_copy():
    """Defect identical to one period: no defect mode anywhere."""
    return validate_crystal(GOLDEN_CELL, (1.0, GOLDEN_CELL))


def expm_layer(eps, d, k, alpha, pol="E"):
    q = 1.0 if pol == "E" else eps
    b2 = k * k * eps - alpha * alpha
    return expm(np.array([[0, q], [-b2 / q, 0]], dtype=complex) * d)


def expm_profile(layers, k, alpha=0.0, pol="E"):
    m = np.eye(2, dtype=complex)
    for d, eps in layers:
        m = expm_layer(eps, d, k, alpha, pol) @ m
    return m


def rk4_layer(eps, d, k, alpha, pol="E", steps=4000):
    """Fundamental matrix of u'' + (k^2 eps - alpha^2) u = 0 over one layer."""
    q = 1.0 if pol == "E" else eps
    a = np.array([[0, q], [-(k * k * eps - alpha * alpha) / q, 0]], dtype=complex)
    h = d / steps
    y = np.eye(2, dtype=complex)
    for _ in range(steps):
        k1 = a @ y
        k2 = a @ (y + h / 2 * k1)
        k3 = a @ (y + h / 2 * k2)
        k4 = a @ (y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def direct_bvp(m, beta0):
    """Reflection/transmission by solving the 2x2 radiation system with numpy."""
    a = np.array(
        [[1j * beta0, 1.0], [1j * beta0 * m[0, 0] - m[1, 0], 1j * beta0 * m[0, 1] - m[1, 1]]]
    )
    u0, du0 = np.linalg.solve(a, [2j * beta0, 0.0])
    uL = m[0, 0] * u0 + m[0, 1] * du0
    return u0 - 1.0, uL


def relerr(a, b):
    return abs(a - b) / max(1.0, abs(b))




def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(LINES):
            terminalreporter.write_line(LINES[number])
