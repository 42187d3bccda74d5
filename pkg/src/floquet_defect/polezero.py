"""Complex-k continuation of the reflection coefficient at fixed incidence.

With ``alpha = k sin(theta)`` and ``beta0 = k cos(theta)`` every ingredient
of the analytic route is an entire function of ``k`` except the Floquet
multiplier, whose square-root branch is followed by path tracking from a
real gap point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bands import basis_for, eigenbasis, gap_containing, multipliers
from .defect import DefectCoeffs, defect_coeffs
from .errors import (
    BranchTrackingLost,
    EscapedNeighborhood,
    NoConvergence,
    NotInGap,
    PoorFit,
    UndefinedAtNonMode,
)
from .medium import CrystalSpec, FixedTheta, Polarization
from .scattering import ChiMatrix, chi_matrix, reflect_analytic, rq_polynomials
from .transfer import SpectralPoint, cell_monodromy, defect_monodromy


@dataclass(frozen=True)
class Terms:
    """Analytic-route ingredients at one complex ``k`` on a chosen branch."""

    k: complex
    mu: complex
    coeffs: DefectCoeffs
    chi: ChiMatrix
    beta0: complex

    def x(self, n: int) -> complex:
        return self.mu ** (2 * n)

    def p(self, n: int) -> complex:
        pc, _ = rq_polynomials(self.coeffs, self.chi)
        x = self.x(n)
        return (pc[0] * x + pc[1]) * x + pc[2]

    def q(self, n: int) -> complex:
        _, qc = rq_polynomials(self.coeffs, self.chi)
        x = self.x(n)
        return (qc[0] * x + qc[1]) * x + qc[2]

    def r(self, n: int) -> complex:
        return self.p(n) / self.q(n)

    def t(self, n: int) -> complex:
        return -2j * self.beta0 * self.x(n) / self.q(n)

    def f_zero(self, n: int) -> complex:
        """Zero condition of r, normalized so the constant term is ``-d0``."""
        co, c = self.coeffs, self.chi
        x = self.x(n)
        lin = c.chi21 / c.chi11 * co.c0 - c.chi11 / c.chi21 * co.b0
        return x * x * co.a0 + x * lin - co.d0

    def f_pole(self, n: int) -> complex:
        """Pole condition of r and t, normalized like :meth:`f_zero`."""
        co, c = self.coeffs, self.chi
        x = self.x(n)
        quad = c.chi21 * c.chi12 / (c.chi11 * c.chi22) * co.a0
        lin = c.chi21 / c.chi11 * co.c0 - c.chi12 / c.chi22 * co.b0
        return x * x * quad + x * lin - co.d0

    @property
    def scale(self) -> float:
        """Magnitude of the individual terms entering f_zero / f_pole."""
        co, c = self.coeffs, self.chi
        return max(
            abs(co.a0),
            abs(co.d0),
            abs(c.chi21 / c.chi11 * co.c0),
            abs(c.chi11 / c.chi21 * co.b0),
            abs(c.chi12 / c.chi22 * co.b0),
            1e-300,
        )


def _matrices(spec, theta, pol, k):
    pt = SpectralPoint(k, k * math.sin(theta), pol)
    return cell_monodromy(spec, pt), defect_monodromy(spec, pt)


def terms_at(spec, theta, pol, k, mu) -> Terms:
    """Ingredients at ``k`` using the multiplier root nearest to ``mu``."""
    t, t0 = _matrices(spec, theta, pol, k)
    mu = nearest_multiplier(t, mu)
    basis = basis_for(t, mu)
    beta0 = k * math.cos(theta)
    return Terms(k, mu, defect_coeffs(t0, basis), chi_matrix(basis, beta0), beta0)


def nearest_multiplier(t: np.ndarray, hint: complex) -> complex:
    m1, m2 = multipliers(t)
    return m1 if abs(m1 - hint) <= abs(m2 - hint) else m2


def _half_disc(t):
    h = (t[0, 0] + t[1, 1]) / 2
    return h * h - 1


def track_multiplier(
    spec, theta, pol, k_from: complex, mu_from: complex, k_to: complex, min_step=1e-12
) -> complex:
    """Follow the multiplier continuously along the segment ``k_from -> k_to``.

    The step is halved whenever the discriminant ``tr^2/4 - 1`` turns by more
    than a quarter turn, or the two roots come close enough to be confused.
    """
    s, h = 0.0, 1.0 / 8
    k_prev, mu = complex(k_from), complex(mu_from)
    disc_prev = _half_disc(_matrices(spec, theta, pol, k_prev)[0])
    while s < 1.0:
        step = min(h, 1.0 - s)
        k_next = k_from + (s + step) * (k_to - k_from)
        t = _matrices(spec, theta, pol, k_next)[0]
        disc = _half_disc(t)
        m1, m2 = multipliers(t)
        sep = abs(m1 - m2)
        jump = abs(cmath.phase(disc / disc_prev)) if disc_prev != 0 and disc != 0 else math.pi
        cand = m1 if abs(m1 - mu) <= abs(m2 - mu) else m2
        if jump > math.pi / 2 or abs(cand - mu) > 0.25 * sep:
            h /= 2
            if h < min_step:
                raise BranchTrackingLost(f"lost the multiplier branch near k={k_next}")
            continue
        s += step
        mu, disc_prev, k_prev = cand, disc, k_next
        h = min(2 * h, 1.0 / 8)
    return mu


def anchor_multiplier(spec, theta, pol, k_real: float) -> complex:
    """The ``|mu| < 1`` multiplier at a real gap point."""
    t = cell_monodromy(spec, SpectralPoint(k_real, k_real * math.sin(theta), pol))
    basis = eigenbasis(t)
    if not abs(basis.mu) < 1:
        raise NotInGap(f"anchor k={k_real} is not in a gap")
    return basis.mu


def rn_complex(
    spec: CrystalSpec,
    theta0: float,
    n: int,
    k: complex,
    pol: Polarization = Polarization.EPar,
    anchor: float | None = None,
) -> complex:
    """Analytic continuation of ``r_n`` to complex ``k``.

    The branch of the multiplier is the one continuously connected to
    ``|mu| < 1`` at the real gap point ``anchor`` (default ``Re k``).
    """
    a = float(k.real if anchor is None else anchor)
    mu = track_multiplier(spec, theta0, pol, a, anchor_multiplier(spec, theta0, pol, a), k)
    return terms_at(spec, theta0, pol, k, mu).r(n)


@dataclass(frozen=True)
class PoleZeroPair:
    n: int
    k_zero: complex
    k_pole: complex
    residual_zero: float  # |p| / scale at k_zero
    residual_pole: float  # |q| / scale at k_pole

    @property
    def delta_n(self) -> float:
        return -self.k_pole.imag

    @property
    def gamma_n(self) -> float:
        return self.k_zero.imag / self.k_pole.imag


def _newton(spec, theta, pol, n, which, k, mu, k0, radius, max_iter=100, tol=1e-12):
    h = 1e-7 * abs(k0)

    def f(kk, hint):
        tm = terms_at(spec, theta, pol, kk, hint)
        return (tm.f_zero(n) if which == "zero" else tm.f_pole(n)), tm

    for _ in range(max_iter):
        val, tm = f(k, mu)
        mu = tm.mu
        fp, _ = f(k + h, mu)
        fm, _ = f(k - h, mu)
        deriv = (fp - fm) / (2 * h)
        step = val / deriv
        k_new = k - step
        if abs(k_new - k0) > radius:
            raise EscapedNeighborhood(f"{which} iteration left |k - k0| <= {radius}")
        mu = track_multiplier(spec, theta, pol, k, mu, k_new)
        k = k_new
        if abs(step) < tol:
            final, tm = f(k, mu)
            if abs(final) < tol * tm.scale:
                return k, tm
    raise NoConvergence(f"{which} search did not converge in {max_iter} iterations")


def find_pair(
    spec: CrystalSpec,
    theta0: float,
    n: int,
    k0: float,
    pol: Polarization = Polarization.EPar,
    gap_width: float | None = None,
) -> PoleZeroPair:
    """Locate the zero of r_n and the pole of (r_n, t_n) born of the mode k0."""
    if gap_width is None:
        gap_width = gap_containing(spec, k0, FixedTheta(theta0), pol).width
    mu0 = anchor_multiplier(spec, theta0, pol, k0)
    seed = k0 - 1j * abs(mu0) ** (2 * n)
    mu_seed = track_multiplier(spec, theta0, pol, k0, mu0, seed)
    kz, tz = _newton(spec, theta0, pol, n, "zero", seed, mu_seed, k0, gap_width)
    kp, tp = _newton(spec, theta0, pol, n, "pole", seed, mu_seed, k0, gap_width)
    cz = tz.chi.chi21 * tz.chi.chi11
    cp = tp.chi.chi11 * tp.chi.chi22
    return PoleZeroPair(
        n,
        kz,
        kp,
        abs(tz.p(n)) / (abs(cz) * tz.scale),
        abs(tp.q(n)) / (abs(cp) * tp.scale),
    )


def gamma_closed_form(co: DefectCoeffs, chi: ChiMatrix, d0_tol: float = 1e-6) -> complex:
    """Closed-form ratio of the zero and pole offsets claimed at a mode.

    ``(chi11^2 b0 / chi21 - chi21 c0) / (chi21 c0 - chi21 chi11 b0 / chi22)``.
    Returned as a complex number: it is not real in general.
    """
    if abs(co.d0) > d0_tol:
        raise UndefinedAtNonMode(f"|d0| = {abs(co.d0)} > {d0_tol}")
    c11, c21, c22 = chi.chi11, chi.chi21, chi.chi22
    return (c11 * c11 / c21 * co.b0 - c21 * co.c0) / (c21 * co.c0 - c21 * c11 / c22 * co.b0)


@dataclass(frozen=True)
class CircleFit:
    center: complex
    diameter: float
    rms_residual: float
    arc_span: float  # angular extent of the samples seen from the center

    @property
    def degenerate(self) -> bool:
        return self.arc_span < math.pi / 2


def fit_circle(z: np.ndarray) -> CircleFit:
    """Algebraic least-squares circle through complex points."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    a = np.column_stack([x, y, np.ones_like(x)])
    sol = np.linalg.lstsq(a, x * x + y * y, rcond=None)[0]
    c = complex(sol[0] / 2, sol[1] / 2)
    rad = math.sqrt(max(sol[2] + abs(c) ** 2, 0.0))
    dist = np.abs(z - c)
    rms = float(np.sqrt(np.mean((dist - rad) ** 2)))
    ang = np.sort(np.angle(z - c))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    return CircleFit(c, 2 * rad, rms, float(2 * math.pi - gaps.max()))


def circle_fit(
    spec: CrystalSpec,
    theta0: float,
    n: int,
    k0: float,
    pol: Polarization = Polarization.EPar,
    window: float = 1e-3,
    samples: int = 400,
    center: float | None = None,
) -> CircleFit:
    """Circle traced by ``r_n(k)`` for real ``k`` in ``center +- window``."""
    if samples < 200:
        raise ValueError("at least 200 samples are required")
    c = k0 if center is None else center
    ks = np.linspace(c - window, c + window, samples)
    rs = np.array([reflect_analytic(spec, k, n, theta0, pol).r for k in ks])
    fit = fit_circle(rs)
    if not fit.rms_residual < 1e-3 * fit.diameter:
        raise PoorFit(f"rms residual {fit.rms_residual:.3g} vs diameter {fit.diameter:.3g}")
    return fit


def winding_rectangle(spec, k0, gap, half_width=None, depth=0.2):
    """Corners of the certification rectangle (counter-clockwise)."""
    if half_width is None:
        half_width = min(gap.width / 4, 0.9 * min(k0 - gap.k_lo, gap.k_hi - k0))
    return [
        complex(k0 - half_width, -depth),
        complex(k0 + half_width, -depth),
        complex(k0 + half_width, 0.0),
        complex(k0 - half_width, 0.0),
    ]


def pair_winding(
    spec: CrystalSpec,
    theta0: float,
    n: int,
    k0: float,
    pol: Polarization = Polarization.EPar,
    half_width: float | None = None,
    depth: float = 0.2,
    samples_per_edge: int = 400,
) -> tuple[int, int]:
    """Winding numbers of p and q around the rectangle enclosing k0.

    Each counts the zeros of the corresponding function inside.  Boundary
    segments are bisected until the phases of p, q and of the multiplier
    discriminant move by less than a quarter turn.
    """
    gap = gap_containing(spec, k0, FixedTheta(theta0), pol)
    corners = winding_rectangle(spec, k0, gap, half_width, depth)
    start = corners[0]
    # the bottom-left corner is not real; reach it from the real axis
    mu = track_multiplier(
        spec, theta0, pol, start.real, anchor_multiplier(spec, theta0, pol, start.real), start
    )

    def sample(k, hint):
        tm = terms_at(spec, theta0, pol, k, hint)
        t = _matrices(spec, theta0, pol, k)[0]
        return tm.mu, tm.p(n), tm.q(n), _half_disc(t)

    cur = (start, *sample(start, mu))
    total_p = total_q = 0.0
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        for j in range(1, samples_per_edge + 1):
            target = a + (b - a) * j / samples_per_edge
            dp, dq, cur = _walk(sample, cur, target)
            total_p += dp
            total_q += dq
    return round(total_p / (2 * math.pi)), round(total_q / (2 * math.pi))


def _walk(sample, cur, target, max_depth=60):
    """Accumulate phase increments of p and q from ``cur`` to ``target``."""
    dp = dq = 0.0
    stack = [(target, 0)]
    while stack:
        k_b, lvl = stack[-1]
        k_a, mu_a, p_a, q_a, d_a = cur
        mu_b, p_b, q_b, d_b = sample(k_b, mu_a)
        inc_p = cmath.phase(p_b / p_a)
        inc_q = cmath.phase(q_b / q_a)
        inc_d = cmath.phase(d_b / d_a)
        if max(abs(inc_p), abs(inc_q), abs(inc_d)) > math.pi / 4 and lvl < max_depth:
            stack.append(((k_a + k_b) / 2, lvl + 1))
            continue
        if lvl >= max_depth:
            raise BranchTrackingLost(f"cannot resolve phase near k={k_b}")
        stack.pop()
        dp += inc_p
        dq += inc_q
        cur = (k_b, mu_b, p_b, q_b, d_b)
    return dp, dq, cur
