"""Transfer (monodromy) matrices of the 1D propagation equation.

The state vector is ``U = (u, q^-1 du/dx)`` with ``q = 1`` for E|| and
``q = eps`` for H||.  A homogeneous layer of thickness ``d`` maps ``U(x)`` to
``U(x + d)`` through a unimodular 2x2 matrix, written with the entire
functions ``C(z) = cos(sqrt(z) d)`` and ``S(z) = sin(sqrt(z) d) / sqrt(z)``
of ``z = beta^2`` so that complex wavenumbers never meet a branch cut.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLayer, ZeroPermittivity
from .medium import CrystalSpec, LayerProfile, Polarization

SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class SpectralPoint:
    k: complex
    alpha: complex
    pol: Polarization = Polarization.EPar
    beta0_sq: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "beta0_sq", self.k * self.k - self.alpha * self.alpha)


def entire_cs(z: complex, d: float) -> tuple[complex, complex]:
    """Return ``(cos(sqrt(z) d), sin(sqrt(z) d) / sqrt(z))``."""
    x = z * d * d
    if abs(x) < SERIES_CUTOFF:
        # Taylor series up to x^4: truncation error below 1e-22 relative.
        c = 1 - x / 2 * (1 - x / 12 * (1 - x / 30 * (1 - x / 56)))
        s = d * (1 - x / 6 * (1 - x / 20 * (1 - x / 42 * (1 - x / 72))))
        return c, s
    r = cmath.sqrt(z)
    return cmath.cos(r * d), cmath.sin(r * d) / r


def layer_matrix(eps: float, d: float, pt: SpectralPoint) -> np.ndarray:
    if not d > 0:
        raise DegenerateLayer(f"layer thickness {d} must be positive")
    if pt.pol is Polarization.HPar and eps == 0:
        raise ZeroPermittivity("H|| needs a nonzero permittivity")
    z = pt.k * pt.k * eps - pt.alpha * pt.alpha
    q = pt.pol.q(eps)
    c, s = entire_cs(z, d)
    return np.array([[c, q * s], [-z * s / q, c]], dtype=complex)


def profile_matrix(profile: LayerProfile, pt: SpectralPoint) -> np.ndarray:
    """Ordered product over a profile, last layer applied leftmost."""
    m = np.eye(2, dtype=complex)
    for d, eps in profile.layers:
        m = layer_matrix(eps, d, pt) @ m
    return m


def cell_monodromy(spec: CrystalSpec, pt: SpectralPoint) -> np.ndarray:
    return profile_matrix(spec.cell, pt)


def defect_monodromy(spec: CrystalSpec, pt: SpectralPoint) -> np.ndarray:
    return profile_matrix(spec.defect.profile, pt)


def matrix_power(t: np.ndarray, n: int) -> np.ndarray:
    """``t**n`` by repeated squaring."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    result = np.eye(2, dtype=complex)
    base = np.asarray(t, dtype=complex)
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


def matrix_power_product(t: np.ndarray, t0: np.ndarray, n: int) -> np.ndarray:
    """Total matrix ``T^n T0 T^n`` of a defect sandwiched between n periods."""
    tn = matrix_power(t, n)
    return tn @ np.asarray(t0, dtype=complex) @ tn


def det2(m: np.ndarray) -> complex:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m)))
