"""Superstructure built by periodizing the defect: n periods, defect, n periods."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bands import gap_containing, refine_edge
from .defect import coeffs_at
from .errors import NoBandFound, NumericalError
from .medium import CrystalSpec, FixedTheta, Polarization
from .transfer import (
    SpectralPoint,
    cell_monodromy,
    defect_monodromy,
    matrix_power_product,
    max_abs,
)

log = logging.getLogger(__name__)

OVERFLOW_GUARD = 1e300


@dataclass(frozen=True)
class SuperTrace:
    trace: complex
    eigen_form: complex  # mu^(2n) a0 + mu^(-2n) d0
    leading: complex  # mu^(2n) a0
    from_product: bool


def super_trace_detail(
    spec: CrystalSpec, n: int, k: float, alpha: float, pol: Polarization = Polarization.EPar
) -> SuperTrace:
    pt = SpectralPoint(k, alpha, pol)
    basis, co = coeffs_at(spec, pt)
    mu = basis.mu
    leading = mu ** (2 * n) * co.a0
    if -2 * n * math.log(abs(mu)) > math.log(OVERFLOW_GUARD):
        try:
            tail = co.d0 * (1 / mu) ** (2 * n)
        except OverflowError:
            # the trace itself leaves double range; mu is real in a gap
            tail = complex(math.copysign(math.inf, co.d0.real)) if co.d0 != 0 else 0j
        eigen = leading + tail
        return SuperTrace(eigen, eigen, leading, False)
    eigen = leading + co.d0 * mu ** (-2 * n)
    tt = matrix_power_product(cell_monodromy(spec, pt), defect_monodromy(spec, pt), n)
    tr = tt[0, 0] + tt[1, 1]
    # rounding in the product scales with its entries, not with the trace
    if abs(tr - eigen) > 1e-8 * max(1.0, max_abs(tt), abs(eigen)):
        raise NumericalError(f"trace {tr} disagrees with eigen identity {eigen}")
    return SuperTrace(tr, eigen, leading, True)


def super_trace(spec, n, k, alpha, pol=Polarization.EPar) -> complex:
    """Trace of ``T^n T0 T^n`` at a gap point of the host crystal."""
    return super_trace_detail(spec, n, k, alpha, pol).trace


@dataclass(frozen=True)
class SupercellReport:
    n: int
    trace_at_mode: complex
    k_lo: float
    k_hi: float
    split: bool = False  # further |tr| < 2 stretches found beside J_n

    @property
    def width(self) -> float:
        return self.k_hi - self.k_lo

    def distance_to(self, k: float) -> float:
        if self.k_lo <= k <= self.k_hi:
            return 0.0
        return min(abs(k - self.k_lo), abs(k - self.k_hi))


def defect_band(
    spec: CrystalSpec,
    n: int,
    k0: float,
    theta0: float = 0.0,
    pol: Polarization = Polarization.EPar,
    gap=None,
    scan_points: int = 64,
) -> SupercellReport:
    """Conduction band of the superstructure opened around the mode ``k0``.

    Bisection on ``|tr| - 2`` outward from ``k0`` over half the host gap on
    each side; a scan of each bracket detects a split (non-interval) band.
    """
    if gap is None:
        gap = gap_containing(spec, k0, FixedTheta(theta0), pol)

    def f(k):
        return abs(super_trace(spec, n, k, k * math.sin(theta0), pol).real) - 2.0

    tr0 = super_trace(spec, n, k0, k0 * math.sin(theta0), pol)
    if abs(tr0.real) >= 2.0:
        raise NoBandFound(f"|tr| = {abs(tr0.real):.6g} >= 2 at k0 (n too small, or no mode)")
    half = gap.width / 2
    lo_end = max(k0 - half, gap.k_lo + 1e-9 * gap.width)
    hi_end = min(k0 + half, gap.k_hi - 1e-9 * gap.width)
    if f(hi_end) <= 0 or f(lo_end) <= 0:
        raise NoBandFound("defect band reaches the host gap edge")
    k_hi = refine_edge(f, k0, hi_end, xtol=1e-15 * max(1.0, k0))
    k_lo = refine_edge(f, lo_end, k0, xtol=1e-15 * max(1.0, k0))
    split = any(
        f(k) < 0
        for a, b in ((lo_end, k_lo), (k_hi, hi_end))
        for k in np.linspace(a, b, scan_points + 2)[1:-1]
    )
    if split:
        log.warning("n=%d: |tr| < 2 outside the interval around k0; J_n is not an interval", n)
    return SupercellReport(n, complex(tr0), float(k_lo), float(k_hi), split)
