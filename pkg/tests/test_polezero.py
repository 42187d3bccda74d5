import math

import numpy as np
import pytest

from floquet_defect import Polarization
from floquet_defect.bands import EigenBasis
from floquet_defect.defect import DefectCoeffs
from floquet_defect.errors import EscapedNeighborhood, PoorFit, UndefinedAtNonMode
from floquet_defect.polezero import (
    anchor_multiplier,
    circle_fit,
    find_pair,
    fit_circle,
    gamma_closed_form,
    pair_winding,
    rn_complex,
    terms_at,
    track_multiplier,
)
from floquet_defect.scattering import chi_matrix, reflect_analytic, structure_point

from conftest import GAP1, K0, MU0


@pytest.fixture(scope="module")
def pairs(golden):
    return {n: find_pair(golden, 0.0, n, K0) for n in range(6, 15)}


@pytest.mark.parametrize("k", [1.75, 2.0, 2.3, K0 + 1e-3])
def test_axis_agrees_with_real_route(golden, k):
    for n in (3, 10):
        assert abs(rn_complex(golden, 0.0, n, complex(k)) - reflect_analytic(golden, k, n).r) < 1e-12


@pytest.mark.parametrize("k", [1.9 - 0.02j, 2.2 - 0.1j, 1.8 - 1e-4j])
def test_reflection_symmetry(golden, k):
    # real ODE coefficients with an i*beta0 radiation condition: the
    # symmetry is about the imaginary axis, r(-conj k) = conj r(k)
    a = rn_complex(golden, 0.0, 8, k)
    b = rn_complex(golden, 0.0, 8, -k.conjugate())
    assert abs(b - a.conjugate()) < 1e-12 * max(1.0, abs(a))


def test_multiplier_tracking_round_trip(golden):
    pol = Polarization.EPar
    mu0 = anchor_multiplier(golden, 0.0, pol, K0)
    assert mu0 == pytest.approx(MU0, rel=1e-12)
    mid = track_multiplier(golden, 0.0, pol, K0, mu0, K0 - 0.3j)
    back = track_multiplier(golden, 0.0, pol, K0 - 0.3j, mid, K0)
    assert back == pytest.approx(mu0, rel=1e-12)
    assert abs(mid) < 1


def test_pole_matches_grid_minimum(golden, pairs):
    # oracle: brute 2D sampling of |q(mu^(2n))| on a grid around k0
    n = 10
    kp = pairs[n].k_pole
    mu = track_multiplier(golden, 0.0, Polarization.EPar, K0, MU0, kp)
    xs = kp.real + np.linspace(-3, 3, 61) * abs(kp.imag)
    ys = np.linspace(-4, -1e-3, 81) * abs(kp.imag)
    best, arg = math.inf, None
    for y in ys:
        for x in xs:
            tm = terms_at(golden, 0.0, Polarization.EPar, complex(x, y), mu)
            v = abs(tm.q(n)) / tm.scale
            if v < best:
                best, arg = v, complex(x, y)
    assert abs(arg - kp) < 0.1 * abs(kp.imag)
    assert abs(reflect_analytic(golden, kp.real, n).r) < 1


def test_large_n_pair_collapses_to_mode(golden):
    pair = find_pair(golden, 0.0, 40, K0)
    assert abs(pair.k_zero - K0) < 1e-10
    assert abs(pair.k_pole - K0) < 1e-10


def test_period_copy_has_no_pair(period_copy):
    with pytest.raises(EscapedNeighborhood):
        find_pair(period_copy, 0.0, 6, K0)


def test_pairs_are_definitional_roots(pairs):
    for pair in pairs.values():
        assert pair.residual_zero < 1e-12 and pair.residual_pole < 1e-12
        assert pair.k_pole.imag < 0 and pair.k_zero.imag < 0
        assert pair.delta_n > 0


def test_geometric_shrink(pairs):
    ns = np.array(sorted(pairs))
    logs = np.log([abs(pairs[n].k_pole - K0) for n in ns])
    slope = np.polyfit(ns, logs, 1)[0]
    assert slope == pytest.approx(2 * math.log(abs(MU0)), rel=0.01)
    # poles approach the axis monotonically
    d = [pairs[n].delta_n for n in ns]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_gamma_ratio_is_constant(pairs):
    g = [pairs[n].gamma_n for n in (8, 10, 12)]
    assert max(g) - min(g) < 0.01 * abs(g[0])


def test_gamma_closed_form_requires_mode(golden):
    sp = structure_point(golden, 2.0)
    with pytest.raises(UndefinedAtNonMode):
        gamma_closed_form(sp.coeffs, sp.chi)


def test_gamma_closed_form_uncoupled_b0():
    chi = chi_matrix(
        EigenBasis(np.array([1.0, 0.3], dtype=complex), np.array([0.2, 1.06], dtype=complex), 0.5),
        1.0,
    )
    assert gamma_closed_form(DefectCoeffs(2.0, 0.0, 0.5, 0.0), chi) == pytest.approx(-1)


def test_fit_circle_exact():
    z = 0.3 + 0.1j + 0.7 * np.exp(1j * np.linspace(0.2, 2.5, 50))
    fit = fit_circle(z)
    assert fit.center == pytest.approx(0.3 + 0.1j, abs=1e-12)
    assert fit.diameter == pytest.approx(1.4, abs=1e-12)
    assert fit.rms_residual < 1e-12
    assert not fit.degenerate


def test_circle_diameter_from_pair(golden, pairs):
    # the circle r_n traces near k0 is the image of the real line under a
    # Moebius map with zero kz and pole kp: diameter |kz - kp| / |Im kp|
    pair = pairs[10]
    fit = circle_fit(golden, 0.0, 10, K0, window=20 * pair.delta_n, center=pair.k_pole.real)
    expected = abs(pair.k_zero - pair.k_pole) / abs(pair.k_pole.imag)
    assert fit.diameter == pytest.approx(expected, rel=0.01)


def test_circle_scale_invariance(golden):
    mu2 = abs(MU0) ** 2
    a = circle_fit(golden, 0.0, 8, K0, window=20 * 3.0e-4)
    b = circle_fit(golden, 0.0, 12, K0, window=20 * 3.0e-4 * mu2**4)
    assert a.diameter == pytest.approx(b.diameter, rel=0.01)


def test_far_window_is_degenerate(golden):
    far = GAP1[1] - 0.2 * (GAP1[1] - GAP1[0])
    try:
        fit = circle_fit(golden, 0.0, 10, K0, window=1e-3, center=far)
    except PoorFit:
        return
    assert fit.degenerate


def test_winding_counts_one_each(golden):
    assert pair_winding(golden, 0.0, 8, K0) == (1, 1)
