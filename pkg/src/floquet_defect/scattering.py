"""Reflection and transmission of the finite defect structure.

Two independent routes are provided: :func:`rt_analytic` evaluates the
closed-form ratio of quadratics in ``X = mu^(2n)`` built from the Floquet
basis, and :func:`rt_direct` solves the radiation boundary conditions for a
given total transfer matrix.  The vacuum on both sides uses ``q = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bands import EigenBasis, classify, eigenbasis
from .defect import DefectCoeffs, defect_coeffs
from .errors import GrazingIncidence, NumericalError, OutsideBand, PoleOnAxis, SingularSystem
from .medium import CrystalSpec, Polarization
from .transfer import (
    SpectralPoint,
    cell_monodromy,
    defect_monodromy,
    matrix_power_product,
)

POLE_TOL = 1e-14


@dataclass(frozen=True)
class ChiMatrix:
    chi11: complex
    chi12: complex
    chi21: complex
    chi22: complex

    @property
    def det(self) -> complex:
        return self.chi11 * self.chi22 - self.chi12 * self.chi21


@dataclass(frozen=True)
class ScatterResult:
    r: complex
    t: complex

    @property
    def energy_residual(self) -> float:
        """``| |r|^2 + |t|^2 - 1 |``; meaningful for real lossless propagating cases."""
        return abs(abs(self.r) ** 2 + abs(self.t) ** 2 - 1.0)

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def T(self) -> float:
        return abs(self.t) ** 2


def chi_matrix(basis: EigenBasis, beta0: complex) -> ChiMatrix:
    if beta0 == 0:
        raise GrazingIncidence("beta0 = 0")
    (v1, v2), (w1, w2) = basis.v, basis.w
    ib = 1j * beta0
    return ChiMatrix(w2 - ib * w1, w2 + ib * w1, -v2 + ib * v1, -v2 - ib * v1)


def rq_polynomials(co: DefectCoeffs, chi: ChiMatrix):
    """Coefficients ``(x^2, x^1, x^0)`` of the numerator p and denominator q."""
    c11, c12, c21, c22 = chi.chi11, chi.chi12, chi.chi21, chi.chi22
    p = (
        c21 * c11 * co.a0,
        c21 * c21 * co.c0 - c11 * c11 * co.b0,
        -c21 * c11 * co.d0,
    )
    q = (
        -c21 * c12 * co.a0,
        -c21 * c22 * co.c0 + c11 * c12 * co.b0,
        c11 * c22 * co.d0,
    )
    return p, q


def _horner(coefs, x):
    return (coefs[0] * x + coefs[1]) * x + coefs[2]


def rt_analytic(
    co: DefectCoeffs, chi: ChiMatrix, mu: complex, n: int, beta0: complex
) -> ScatterResult:
    """Reflection/transmission of ``n`` periods, defect, ``n`` periods."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = mu ** (2 * n)
    pc, qc = rq_polynomials(co, chi)
    qx = _horner(qc, x)
    if abs(qx) <= POLE_TOL * max(abs(c) for c in qc):
        raise PoleOnAxis(f"denominator {qx} vanishes (numerically resonant input)")
    return ScatterResult(_horner(pc, x) / qx, -2j * beta0 * x / qx)


def rt_direct(m: np.ndarray, beta0: complex) -> ScatterResult:
    """Solve the radiation conditions for a unimodular total matrix ``m``.

    Unknowns are ``u(0)`` and ``u'(0)``; with ``U(L) = m U(0)`` the system is

        i b u(0) + u'(0) = 2 i b
        i b u(L) - u'(L) = 0

    and ``r = u(0) - 1``, ``t = u(L)``.  Cramer's rule with ``det m = 1``
    gives ``t = -2 i b / det A`` without the cancellation of forming u(L).
    """
    ib = 1j * beta0
    a11, a12 = ib, 1.0
    a21 = ib * m[0, 0] - m[1, 0]
    a22 = ib * m[0, 1] - m[1, 1]
    det_a = a11 * a22 - a12 * a21
    scale = max(abs(a21), abs(a22), abs(beta0), 1e-300)
    if abs(det_a) < 1e-14 * scale * max(1.0, abs(beta0)):
        raise SingularSystem("boundary-value system is singular")
    u0 = 2j * beta0 * a22 / det_a
    return ScatterResult(u0 - 1.0, -2j * beta0 / det_a)


@dataclass(frozen=True)
class Limits:
    at_mode: complex
    off_mode: complex
    t_at_mode: complex
    degenerate: bool = False


def rt_limits(co: DefectCoeffs, chi: ChiMatrix, beta0: complex) -> Limits:
    """Large-n limits of the reflection coefficient at and away from a mode.

    The at-mode value is the ``X -> 0`` limit of ``p(X)/q(X)`` with
    ``d0 = 0``: ``(chi21^2 c0 - chi11^2 b0) / (chi11 chi12 b0 - chi21 chi22 c0)``.
    """
    c11, c12, c21, c22 = chi.chi11, chi.chi12, chi.chi21, chi.chi22
    off = -c21 / c22
    num = c21 * c21 * co.c0 - c11 * c11 * co.b0
    den = c11 * c12 * co.b0 - c21 * c22 * co.c0
    if abs(den) < 1e-14 * (abs(c11 * c12 * co.b0) + abs(c21 * c22 * co.c0) + 1e-300):
        # no defect coupling (b0 = c0 = 0): only the off-mode limit exists
        return Limits(off, off, 0j, degenerate=True)
    return Limits(num / den, off, -2j * beta0 / den)


def envelope(tt: np.ndarray, beta0: float) -> float:
    """Upper envelope of |r| for a finite stack of identical super-periods.

    ``sqrt(1 - (4 - tr^2) / (t12 b - t21 / b)^2)``.  With ``det = 1`` the
    radicand's numerator equals ``(t11 - t22)^2 + (t12 b + t21 / b)^2``,
    which is what is evaluated: it is nonnegative and free of cancellation.
    """
    tr = (tt[0, 0] + tt[1, 1]).real
    if abs(tr) >= 2.0:
        raise OutsideBand(f"|tr| = {abs(tr)} >= 2")
    off = (tt[0, 1] * beta0 - tt[1, 0] / beta0).real
    if off == 0:
        raise NumericalError("envelope undefined: off-diagonal combination vanishes")
    num = math.hypot((tt[0, 0] - tt[1, 1]).real, (tt[0, 1] * beta0 + tt[1, 0] / beta0).real)
    return min(1.0, num / abs(off))


def envelope_direct(tt: np.ndarray, beta0: float) -> float:
    """Same envelope from the radicand as written; loses accuracy near 0."""
    tr = (tt[0, 0] + tt[1, 1]).real
    if abs(tr) >= 2.0:
        raise OutsideBand(f"|tr| = {abs(tr)} >= 2")
    off = (tt[0, 1] * beta0 - tt[1, 0] / beta0).real
    arg = 1.0 - (4.0 - tr * tr) / (off * off)
    if arg < -1e-12:
        raise NumericalError(f"envelope radicand {arg} is negative")
    return math.sqrt(min(1.0, max(arg, 0.0)))


# -- convenience wrappers on a crystal -------------------------------------


@dataclass(frozen=True)
class StructurePoint:
    """Everything the analytic route needs at one real (k, alpha)."""

    pt: SpectralPoint
    beta0: complex
    t: np.ndarray
    t0: np.ndarray
    basis: EigenBasis
    coeffs: DefectCoeffs
    chi: ChiMatrix


def structure_point(
    spec: CrystalSpec, k: float, theta: float = 0.0, pol: Polarization = Polarization.EPar
) -> StructurePoint:
    pt = SpectralPoint(k, k * math.sin(theta), pol)
    beta0 = k * math.cos(theta)
    t = cell_monodromy(spec, pt)
    t0 = defect_monodromy(spec, pt)
    basis = eigenbasis(t, classify(t))
    co = defect_coeffs(t0, basis)
    return StructurePoint(pt, beta0, t, t0, basis, co, chi_matrix(basis, beta0))


def reflect_analytic(spec, k, n, theta=0.0, pol=Polarization.EPar) -> ScatterResult:
    sp = structure_point(spec, k, theta, pol)
    return rt_analytic(sp.coeffs, sp.chi, sp.basis.mu, n, sp.beta0)


def reflect_direct(spec, k, n, theta=0.0, pol=Polarization.EPar) -> ScatterResult:
    pt = SpectralPoint(k, k * math.sin(theta), pol)
    m = matrix_power_product(cell_monodromy(spec, pt), defect_monodromy(spec, pt), n)
    return rt_direct(m, k * math.cos(theta))


def superstructure_envelope(spec, k, n, theta=0.0, pol=Polarization.EPar) -> float:
    pt = SpectralPoint(k, k * math.sin(theta), pol)
    tt = matrix_power_product(cell_monodromy(spec, pt), defect_monodromy(spec, pt), n)
    return envelope(tt, k * math.cos(theta))
