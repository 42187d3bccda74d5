"""Defect matrix in the Floquet basis and the defect-mode dispersion relation.

A defect mode is a gap point where the defect matrix sends the solution
decaying to the left (``w``) onto the one decaying to the right (``v``);
in coefficients this is ``d0 = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bands import (
    EigenBasis,
    GapInterval,
    classify,
    eigenbasis,
    find_gaps,
)
from .errors import NotInGap, NumericalError
from .medium import CrystalSpec, FixedTheta, Polarization
from .transfer import SpectralPoint, cell_monodromy, defect_monodromy

log = logging.getLogger(__name__)

MODE_RESIDUAL = 1e-9


@dataclass(frozen=True)
class DefectCoeffs:
    """``T0 v = a0 v + b0 w`` and ``T0 w = c0 v + d0 w``."""

    a0: complex
    b0: complex
    c0: complex
    d0: complex

    @property
    def det(self) -> complex:
        return self.a0 * self.d0 - self.c0 * self.b0

    def to_canonical(self, basis: EigenBasis) -> np.ndarray:
        p = basis.matrix
        return p @ np.array([[self.a0, self.c0], [self.b0, self.d0]]) @ _inverse_unimodular(p)


@dataclass(frozen=True)
class DefectMode:
    k0: float
    alpha0: float
    theta0: float | None
    gap_index: int
    residual: float
    mu: float
    gap_lo: float
    gap_hi: float

    @property
    def scatterable(self) -> bool:
        return self.theta0 is not None

    @property
    def gap(self) -> GapInterval:
        return GapInterval(self.gap_lo, self.gap_hi, self.gap_index)

    def as_record(self) -> dict:
        rec = {
            "k0": self.k0,
            "alpha0": self.alpha0,
            "gap_index": self.gap_index,
            "residual": self.residual,
        }
        if self.theta0 is not None:
            rec["theta0"] = self.theta0
        return rec


def _inverse_unimodular(p: np.ndarray) -> np.ndarray:
    # exact inverse when det p = 1
    return np.array([[p[1, 1], -p[0, 1]], [-p[1, 0], p[0, 0]]])


def defect_coeffs(t0: np.ndarray, basis: EigenBasis) -> DefectCoeffs:
    m = _inverse_unimodular(basis.matrix) @ t0 @ basis.matrix
    return DefectCoeffs(m[0, 0], m[1, 0], m[0, 1], m[1, 1])


def coeffs_at(spec: CrystalSpec, pt: SpectralPoint, require_gap: bool = True):
    """Floquet basis and defect coefficients at a real spectral point."""
    t = cell_monodromy(spec, pt)
    cls = classify(t)
    if require_gap and not cls.is_gap:
        raise NotInGap(f"(k={pt.k}, alpha={pt.alpha}) is not in a gap ({cls.kind.value})")
    basis = eigenbasis(t, cls)
    return basis, defect_coeffs(defect_monodromy(spec, pt), basis)


def mode_determinant(t0: np.ndarray, basis: EigenBasis) -> complex:
    """``det(T0 w, v)``; vanishes exactly at defect modes."""
    tw = t0 @ basis.w
    return tw[0] * basis.v[1] - tw[1] * basis.v[0]


def dispersion(
    spec: CrystalSpec, k: float, alpha: float, pol: Polarization = Polarization.EPar
) -> float:
    """``d0(k, alpha)`` at a real gap point.

    The value is real up to rounding; the identity ``det(T0 w, v) = -d0`` is
    checked on the way.
    """
    pt = SpectralPoint(k, alpha, pol)
    basis, co = coeffs_at(spec, pt)
    other = mode_determinant(defect_monodromy(spec, pt), basis)
    if abs(other + co.d0) > 1e-10 * max(1.0, abs(co.d0)):
        raise NumericalError(f"det(T0 w, v) = {other} disagrees with -d0 = {-co.d0}")
    return float(co.d0.real)


def _d0_along(spec, incidence, pol):
    def f(k):
        return dispersion(spec, k, incidence.alpha_at(k), pol)

    return f


def _refine_root(f, a, b, fa, fb, tol=1e-11, max_iter=200):
    """Bisection down to 1e-6, then secant polished to machine precision."""
    while b - a > 1e-6:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0:
            return m, 0.0
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    x0, f0, x1, f1 = a, fa, b, fb
    best = (x0, f0) if abs(f0) < abs(f1) else (x1, f1)
    for _ in range(max_iter):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (a <= x2 <= b):
            x2 = 0.5 * (a + b)
        f2 = f(x2)
        if abs(f2) < abs(best[1]):
            best = (x2, f2)
        step = abs(x2 - x1)
        x0, f0, x1, f1 = x1, f1, x2, f2
        if f2 == 0 or step < 4 * np.finfo(float).eps * abs(x2):
            break
        if step < tol and abs(f2) >= abs(f0):
            break
    return best


def find_defect_modes(
    spec: CrystalSpec,
    incidence=FixedTheta(0.0),
    k_window: tuple[float, float] = (0.05, 2 * math.pi),
    pol: Polarization = Polarization.EPar,
    scan_points: int = 400,
    gap_points: int = 2000,
    residual_tol: float = MODE_RESIDUAL,
) -> list[DefectMode]:
    """All roots of ``d0`` inside the gaps of a fixed-incidence line."""
    f = _d0_along(spec, incidence, pol)
    modes = []
    for gap in find_gaps(spec, k_window[0], k_window[1], incidence, pol, gap_points):
        inset = 1e-7 * max(1.0, gap.width)
        ks = np.linspace(gap.k_lo + inset, gap.k_hi - inset, scan_points)
        vals = []
        for k in ks:
            try:
                vals.append(f(k))
            except NotInGap:
                vals.append(math.nan)
        for i in range(len(ks) - 1):
            fa, fb = vals[i], vals[i + 1]
            if not (math.isfinite(fa) and math.isfinite(fb)):
                continue
            if fa == 0 or (fa > 0) != (fb > 0):
                k0, res = (ks[i], 0.0) if fa == 0 else _refine_root(f, ks[i], ks[i + 1], fa, fb)
                if abs(res) > residual_tol:
                    # sign change through a pole of d0, not a root
                    continue
                modes.append(_make_mode(spec, k0, res, incidence, pol, gap))
        _warn_double_roots(ks, vals)
    modes.sort(key=lambda m: m.k0)
    return modes


def _warn_double_roots(ks, vals, tol=1e-6):
    a = np.abs(np.asarray(vals, dtype=float))
    for i in range(1, len(a) - 1):
        if a[i] < tol and a[i] <= a[i - 1] and a[i] <= a[i + 1]:
            if (vals[i - 1] > 0) == (vals[i + 1] > 0) and vals[i] != 0:
                log.warning("possible double root of d0 near k=%.12g; not reported", ks[i])


def _make_mode(spec, k0, res, incidence, pol, gap) -> DefectMode:
    alpha0 = float(incidence.alpha_at(k0))
    theta0 = math.asin(alpha0 / k0) if abs(alpha0) < k0 else None
    t = cell_monodromy(spec, SpectralPoint(k0, alpha0, pol))
    mu = eigenbasis(t).mu
    return DefectMode(
        k0=float(k0),
        alpha0=alpha0,
        theta0=theta0,
        gap_index=gap.index,
        residual=abs(float(res)),
        mu=float(mu.real),
        gap_lo=float(gap.k_lo),
        gap_hi=float(gap.k_hi),
    )
