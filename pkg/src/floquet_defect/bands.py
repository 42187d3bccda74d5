"""Band/gap classification and the normalized Floquet eigenbasis."""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateEigenvalues, NonRealTrace, NotInGap
from .medium import CrystalSpec, FixedAlpha, FixedTheta, Polarization
from .transfer import SpectralPoint, cell_monodromy

EDGE_TOL = 1e-9
IMAG_TRACE_TOL = 1e-9


class BandKind(enum.Enum):
    Gap = "gap"
    Band = "band"
    Edge = "edge"


@dataclass(frozen=True)
class BandClass:
    kind: BandKind
    discriminant: float  # |tr T| - 2

    @property
    def is_gap(self) -> bool:
        return self.kind is BandKind.Gap


@dataclass(frozen=True)
class EigenBasis:
    """Eigenpairs ``(v, mu)`` and ``(w, 1/mu)`` with ``det(v, w) = 1``."""

    v: np.ndarray
    w: np.ndarray
    mu: complex

    def rescaled(self, s: complex) -> "EigenBasis":
        return EigenBasis(self.v * s, self.w / s, self.mu)

    @property
    def matrix(self) -> np.ndarray:
        """Column matrix ``(v | w)``."""
        return np.column_stack([self.v, self.w])


def classify(t: np.ndarray, tol: float = EDGE_TOL) -> BandClass:
    tr = t[0, 0] + t[1, 1]
    if abs(tr.imag) > IMAG_TRACE_TOL:
        raise NonRealTrace(f"trace {tr} is not real; complex k passed?")
    disc = abs(tr.real) - 2.0
    if disc > tol:
        kind = BandKind.Gap
    elif disc < -tol:
        kind = BandKind.Band
    else:
        kind = BandKind.Edge
    return BandClass(kind, disc)


def multipliers(t: np.ndarray) -> tuple[complex, complex]:
    """Both roots of ``mu^2 - tr mu + 1 = 0``, in no particular order."""
    half = (t[0, 0] + t[1, 1]) / 2
    root = cmath.sqrt(half * half - 1)
    # avoid cancellation: compute the larger root first, the other from mu1*mu2 = 1
    big = half + root if abs(half + root) >= abs(half - root) else half - root
    return big, 1 / big


def eigenvector(t: np.ndarray, mu: complex) -> np.ndarray:
    """Null vector of ``T - mu I`` from the row with the larger pivot."""
    a = np.array([t[0, 1], mu - t[0, 0]])
    b = np.array([mu - t[1, 1], t[1, 0]])
    x = a if np.max(np.abs(a)) >= np.max(np.abs(b)) else b
    if np.max(np.abs(x)) == 0:
        raise DegenerateEigenvalues("T - mu I vanishes identically")
    return x


def basis_for(t: np.ndarray, mu: complex) -> EigenBasis:
    """Eigenbasis attached to a prescribed multiplier ``mu`` (any branch).

    ``v`` is scaled so its largest component is real positive; ``w`` is then
    fixed by ``det(v, w) = 1``.
    """
    v = eigenvector(t, mu)
    w = eigenvector(t, 1 / mu)
    big = v[np.argmax(np.abs(v))]
    v = v * (abs(big) / big)
    d = v[0] * w[1] - v[1] * w[0]
    if d == 0 or abs(d) < 1e-14 * np.max(np.abs(v)) * np.max(np.abs(w)):
        raise DegenerateEigenvalues("eigenvectors are (nearly) collinear")
    return EigenBasis(v, w / d, complex(mu))


def eigenbasis(t: np.ndarray, cls: BandClass | None = None) -> EigenBasis:
    """Floquet eigenbasis with the convention ``|mu| < 1`` in gaps.

    In a band both multipliers lie on the unit circle; the one with
    ``Im mu >= 0`` is taken as ``mu``.
    """
    if cls is None:
        cls = classify(t)
    if cls.kind is BandKind.Edge:
        raise DegenerateEigenvalues("band edge: |tr T| = 2")
    m1, m2 = multipliers(t)
    if cls.kind is BandKind.Gap:
        mu = m1 if abs(m1) < abs(m2) else m2
    else:
        # |mu| = 1 exactly in exact arithmetic
        m1 /= abs(m1)
        m2 = m1.conjugate()
        mu = m1 if m1.imag >= 0 else m2
    return basis_for(t, mu)


def point_for(k: float, incidence, pol: Polarization) -> SpectralPoint:
    return SpectralPoint(k, incidence.alpha_at(k), pol)


@dataclass(frozen=True)
class BandMapRow:
    k: float
    alpha: float
    trace: float
    cls: BandClass


def band_map(
    spec: CrystalSpec,
    ks: Sequence[float],
    alphas: Sequence[float] | None = None,
    theta: float | None = None,
    pol: Polarization = Polarization.EPar,
    tol: float = EDGE_TOL,
) -> list[BandMapRow]:
    """Classify every point of a (k, alpha) grid, or of a fixed-angle line.

    Row order is alpha-major, k-minor.  Only the unit cell enters: the defect
    never changes the band structure.
    """
    if (alphas is None) == (theta is None):
        raise ValueError("give exactly one of alphas or theta")
    rows = []
    if theta is not None:
        line = FixedTheta(theta)
        grid = [(k, line.alpha_at(k)) for k in ks]
    else:
        grid = [(k, a) for a in alphas for k in ks]
    for k, a in grid:
        t = cell_monodromy(spec, SpectralPoint(k, a, pol))
        c = classify(t, tol)
        rows.append(BandMapRow(float(k), float(a), float(t[0, 0].real + t[1, 1].real), c))
    return rows


@dataclass(frozen=True)
class GapInterval:
    k_lo: float
    k_hi: float
    index: int
    open_lo: bool = False  # True when the gap continues below the scanned window
    open_hi: bool = False

    @property
    def width(self) -> float:
        return self.k_hi - self.k_lo

    @property
    def center(self) -> float:
        return 0.5 * (self.k_lo + self.k_hi)

    def contains(self, k: float) -> bool:
        return self.k_lo < k < self.k_hi


def trace_discriminant(spec, k, incidence, pol) -> float:
    t = cell_monodromy(spec, point_for(k, incidence, pol))
    return abs(t[0, 0].real + t[1, 1].real) - 2.0


def refine_edge(f, a: float, b: float, xtol: float = 1e-12) -> float:
    """Bisection for a sign change of ``f`` on ``[a, b]``."""
    fa = f(a)
    while b - a > xtol:
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def find_gaps(
    spec: CrystalSpec,
    k_min: float,
    k_max: float,
    incidence=FixedAlpha(0.0),
    pol: Polarization = Polarization.EPar,
    points: int = 2000,
) -> list[GapInterval]:
    """Locate gap intervals along a fixed-incidence line by trace scanning."""
    if not (0 < k_min < k_max):
        raise ValueError("need 0 < k_min < k_max")
    ks = np.linspace(k_min, k_max, points)

    def f(k):
        return trace_discriminant(spec, k, incidence, pol)

    vals = [f(k) for k in ks]
    gaps = []
    start = None
    open_lo = False
    for i, val in enumerate(vals):
        inside = val > 0
        if inside and start is None:
            if i == 0:
                start, open_lo = k_min, True
            else:
                start = refine_edge(f, ks[i - 1], ks[i])
        elif not inside and start is not None:
            gaps.append(GapInterval(start, refine_edge(f, ks[i - 1], ks[i]), len(gaps), open_lo))
            start, open_lo = None, False
    if start is not None:
        gaps.append(GapInterval(start, k_max, len(gaps), open_lo, True))
    return gaps


def gap_containing(spec, k, incidence, pol, max_extent: float = 5.0) -> GapInterval:
    """Gap interval around a gap point ``k`` (edges refined by bisection)."""
    def f(x):
        return trace_discriminant(spec, x, incidence, pol)

    if f(k) <= 0:
        raise NotInGap(f"k={k} is not in a gap")
    edges = []
    for direction in (-1, 1):
        step = 1e-3 * max(1.0, abs(k))
        a = k
        while True:
            b = a + direction * step
            if b <= 0:
                edges.append(0.0)
                break
            if f(b) <= 0:
                lo, hi = sorted((a, b))
                edges.append(refine_edge(f, lo, hi))
                break
            a = b
            step *= 1.5
            if abs(b - k) > max_extent:
                edges.append(b)
                break
    return GapInterval(edges[0], edges[1], 0)
