"""Exit criteria evaluated on the built-in golden crystal.

Golden crystal: cell ``[(0.5, 4), (0.5, 1)]``, defect of width 0.8 and
permittivity 2.25, E|| polarization, normal incidence.  Every check returns a
:class:`CheckResult`; nothing here raises on a failed criterion.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import polezero, scattering, supercell
from .bands import band_map, eigenbasis, find_gaps
from .defect import coeffs_at, defect_coeffs, find_defect_modes, mode_determinant
from .medium import CrystalSpec, FixedTheta, Polarization, validate_crystal
from .transfer import (
    SpectralPoint,
    cell_monodromy,
    defect_monodromy,
    det2,
    matrix_power,
    matrix_power_product,
)

GOLDEN_CELL = ((0.5, 4.0), (0.5, 1.0))
GOLDEN_DEFECT = (0.8, ((0.8, 2.25),))
SEED = 20240607


def golden_spec() -> CrystalSpec:
    return validate_crystal(GOLDEN_CELL, GOLDEN_DEFECT)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: str
    target: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d} {self.name}: {self.measured} (target {self.target})"


@lru_cache(maxsize=None)
def golden_mode():
    """First-gap defect mode of the golden crystal and its gap."""
    spec = golden_spec()
    modes = find_defect_modes(spec, FixedTheta(0.0), (0.05, 2 * math.pi))
    first_gap = find_gaps(spec, 0.05, 2 * math.pi, FixedTheta(0.0))[0]
    mode = next(m for m in modes if m.gap_index == first_gap.index)
    return mode, first_gap


def _loglinear(ns, ys):
    ns = np.asarray(ns, dtype=float)
    ly = np.log(np.asarray(ys, dtype=float))
    slope, icpt = np.polyfit(ns, ly, 1)
    resid = ly - (slope * ns + icpt)
    r2 = 1 - np.sum(resid**2) / np.sum((ly - ly.mean()) ** 2)
    return float(slope), float(r2)


def check_unimodularity() -> CheckResult:
    spec = golden_spec()
    ks = np.linspace(1e-3, 4 * math.pi, 200)
    alphas = np.linspace(-math.pi, math.pi, 51)[1:]
    start = time.perf_counter()
    worst = 0.0
    for pol in Polarization:
        for a in alphas:
            for k in ks:
                pt = SpectralPoint(float(k), float(a), pol)
                for m in (cell_monodromy(spec, pt), defect_monodromy(spec, pt)):
                    worst = max(worst, abs(det2(m) - 1))
    elapsed = time.perf_counter() - start
    return CheckResult(
        1,
        "unimodularity",
        worst < 1e-12 and elapsed < 5.0,
        f"max|det-1|={worst:.3g}",
        "<1e-12 over 200x50 grid, both polarizations, <5 s",
    )


@lru_cache(maxsize=None)
def oracle_samples(count: int = 500) -> tuple[tuple[float, int, str], ...]:
    """Deterministic (k, n, region) samples: gap, band and near-mode thirds."""
    mode, gap = golden_mode()
    spec = golden_spec()
    gaps = find_gaps(spec, 0.05, 2 * math.pi, FixedTheta(0.0))
    rng = np.random.default_rng(SEED)
    out = []
    band_ranges = [(0.1, gaps[0].k_lo - 1e-3), (gaps[0].k_hi + 1e-3, gaps[1].k_lo - 1e-3)]
    for i in range(count):
        n = int(rng.integers(0, 26))
        region = ("gap", "band", "near-mode")[i % 3]
        if region == "gap":
            g = gaps[int(rng.integers(0, 2))]
            k = rng.uniform(g.k_lo + 1e-3, g.k_hi - 1e-3)
        elif region == "band":
            lo, hi = band_ranges[int(rng.integers(0, 2))]
            k = rng.uniform(lo, hi)
        else:
            k = mode.k0 + rng.choice([-1.0, 1.0]) * 10 ** rng.uniform(-6, -2)
        out.append((float(k), n, region))
    return tuple(out)


def _rel(a, b):
    return abs(a - b) / abs(b)


def check_oracle_equivalence() -> CheckResult:
    spec = golden_spec()
    worst = 0.0
    for k, n, _ in oracle_samples():
        ra = scattering.reflect_analytic(spec, k, n)
        rd = scattering.reflect_direct(spec, k, n)
        worst = max(worst, _rel(ra.r, rd.r), _rel(ra.t, rd.t))
    return CheckResult(
        2, "oracle equivalence", worst < 1e-9, f"max rel dev={worst:.3g}", "<1e-9 over 500 samples"
    )


def check_energy() -> CheckResult:
    spec = golden_spec()
    worst = 0.0
    for k, n, _ in oracle_samples():
        for res in (scattering.reflect_analytic(spec, k, n), scattering.reflect_direct(spec, k, n)):
            worst = max(worst, res.energy_residual)
    return CheckResult(3, "energy conservation", worst < 1e-10, f"max residual={worst:.3g}", "<1e-10")


def check_gauge() -> CheckResult:
    """Deviation measured on the unit vector (r, t) over all oracle samples.

    Near a mode the rescaled basis perturbs ``d0`` by ~eps in absolute terms,
    which moves (r, t) by ~eps / |d0|; the worst case away from the mode
    (|k - k0| >= 1e-4) is reported alongside.
    """
    spec = golden_spec()
    mode, _ = golden_mode()
    rng = np.random.default_rng(SEED + 4)
    worst = worst_far = 0.0
    for k, n, _ in oracle_samples():
        sp = scattering.structure_point(spec, k)
        ref = scattering.rt_analytic(sp.coeffs, sp.chi, sp.basis.mu, n, sp.beta0)
        norm = math.hypot(abs(ref.r), abs(ref.t))
        for _ in range(20):
            s = 10 ** rng.uniform(-1, 1) * np.exp(1j * rng.uniform(0, 2 * math.pi))
            basis = sp.basis.rescaled(s)
            co = defect_coeffs(sp.t0, basis)
            chi = scattering.chi_matrix(basis, sp.beta0)
            res = scattering.rt_analytic(co, chi, basis.mu, n, sp.beta0)
            dev = math.hypot(abs(res.r - ref.r), abs(res.t - ref.t)) / norm
            worst = max(worst, dev)
            if abs(k - mode.k0) >= 1e-4:
                worst_far = max(worst_far, dev)
    return CheckResult(
        4,
        "gauge invariance",
        worst < 1e-12,
        f"max change of (r,t)={worst:.3g} (away from mode: {worst_far:.3g})",
        "<1e-12",
    )


def check_mode_detection() -> CheckResult:
    spec = golden_spec()
    mode, _ = golden_mode()
    pt = SpectralPoint(mode.k0, 0.0, Polarization.EPar)
    basis, co = coeffs_at(spec, pt)
    ident = abs(mode_determinant(defect_monodromy(spec, pt), basis) + co.d0)
    ok = mode.residual < 1e-9 and ident < 1e-10
    return CheckResult(
        5,
        "defect-mode detection",
        ok,
        f"k0={mode.k0!r}, |d0|={mode.residual:.3g}, |det(T0w,v)+d0|={ident:.3g}",
        "residual <1e-9, identity <1e-10",
    )


def check_reflection_dip() -> CheckResult:
    spec = golden_spec()
    mode, gap = golden_mode()
    n = 20
    side = [mode.k0 - 0.1 * gap.width, mode.k0 + 0.1 * gap.width]
    off_dev = max(1 - abs(scattering.reflect_analytic(spec, k, n).r) for k in side)
    sp = scattering.structure_point(spec, mode.k0)
    lim = scattering.rt_limits(sp.coeffs, sp.chi, sp.beta0)
    r_mode = scattering.reflect_analytic(spec, mode.k0, n).r
    lim_dev = abs(r_mode - lim.at_mode)
    unit_dev = max(
        abs(abs(scattering.rt_limits(s.coeffs, s.chi, s.beta0).off_mode) - 1)
        for s in [sp] + [scattering.structure_point(spec, k) for k in side]
    )
    ok = off_dev < 1e-5 and lim_dev < 1e-4 and unit_dev < 1e-12
    return CheckResult(
        6,
        "reflection dip",
        ok,
        f"1-|r| off-mode={off_dev:.3g}, |r20(k0)-r_inf|={lim_dev:.3g}, ||r_off|-1|={unit_dev:.3g}",
        "<1e-5, <1e-4, <1e-12",
    )


@lru_cache(maxsize=None)
def tracked_pairs(ns: tuple[int, ...]):
    spec = golden_spec()
    mode, gap = golden_mode()
    return {n: polezero.find_pair(spec, 0.0, n, mode.k0, gap_width=gap.width) for n in ns}


def check_pole_zero() -> CheckResult:
    spec = golden_spec()
    mode, _ = golden_mode()
    ns = tuple(range(6, 15))
    windings = [polezero.pair_winding(spec, 0.0, n, mode.k0) for n in ns]
    pairs = tracked_pairs(ns)
    predicted = 2 * math.log(abs(mode.mu))
    sp_, r2p = _loglinear(ns, [abs(pairs[n].k_pole - mode.k0) for n in ns])
    sz, r2z = _loglinear(ns, [abs(pairs[n].k_zero - mode.k0) for n in ns])
    ok = (
        all(w == (1, 1) for w in windings)
        and abs(sp_ / predicted - 1) < 0.05
        and abs(sz / predicted - 1) < 0.05
        and min(r2p, r2z) > 0.99
    )
    return CheckResult(
        7,
        "pole/zero certification",
        ok,
        f"windings={sorted(set(windings))}, slopes pole={sp_:.5g} zero={sz:.5g} "
        f"(pred {predicted:.5g}), R2={min(r2p, r2z):.6f}",
        "windings 1, slope within 5%, R2>0.99",
    )


def check_gamma_ratio() -> CheckResult:
    mode, _ = golden_mode()
    spec = golden_spec()
    pairs = tracked_pairs((8, 10, 12))
    gammas = [pairs[n].gamma_n for n in (8, 10, 12)]
    spread = max(gammas) / min(gammas) - 1
    sp = scattering.structure_point(spec, mode.k0)
    closed = polezero.gamma_closed_form(sp.coeffs, sp.chi)
    mismatch = abs(abs(gammas[1]) / abs(closed) - 1)
    return CheckResult(
        8,
        "zero/pole ratio",
        spread < 0.01 and mismatch < 0.01,
        f"gamma_n={[round(float(g), 6) for g in gammas]}, |gamma_closed|={abs(closed):.6g}, "
        f"spread={spread:.3g}, mismatch={mismatch:.3g}",
        "spread <1%, |gamma| match <1%",
    )


def check_circle() -> CheckResult:
    spec = golden_spec()
    mode, _ = golden_mode()
    n = 10
    pair = tracked_pairs((n,))[n]
    window = 20 * pair.delta_n
    fit = polezero.fit_circle(
        [scattering.reflect_analytic(spec, k, n).r for k in np.linspace(mode.k0 - window, mode.k0 + window, 400)]
    )
    claimed = math.sqrt(1 + pair.gamma_n**2)
    mismatch = abs(fit.diameter / claimed - 1)
    ok = mismatch < 0.01 and fit.rms_residual < 1e-3 * fit.diameter
    return CheckResult(
        9,
        "reflection circle",
        ok,
        f"diameter={fit.diameter:.6g}, sqrt(1+gamma^2)={claimed:.6g}, "
        f"|kz-kp|/|Im kp|={abs(pair.k_zero - pair.k_pole) / pair.delta_n:.6g}, "
        f"rms/diam={fit.rms_residual / fit.diameter:.3g}",
        "diameter within 1%, rms <1e-3 diameter",
    )


def check_supercell() -> CheckResult:
    spec = golden_spec()
    mode, gap = golden_mode()
    ns = list(range(4, 11))
    traces = {n: supercell.super_trace_detail(spec, n, mode.k0, 0.0) for n in ns}
    inside = all(abs(traces[n].trace) < 2 for n in ns)
    # d0(k0) cannot beat ~1 ulp and its term grows like |mu|^-4n relative to
    # mu^2n a0, so the match degrades with n; reported per n, not truncated
    devs = {n: abs(traces[n].trace - traces[n].leading) / abs(traces[n].leading) for n in ns}
    match = max(devs.values())
    resolved = [n for n in ns if devs[n] < 1e-8]
    reports = [supercell.defect_band(spec, n, mode.k0, gap=gap) for n in ns]
    predicted = 2 * math.log(abs(mode.mu))
    slope, r2 = _loglinear(ns, [r.width for r in reports])
    ok = inside and match < 1e-8 and abs(slope / predicted - 1) < 0.05
    return CheckResult(
        10,
        "supercell band",
        ok,
        f"max|tr|={max(abs(t.trace) for t in traces.values()):.3g}, trace match={match:.3g} "
        f"(below 1e-8 for n={resolved[0] if resolved else '-'}..{resolved[-1] if resolved else '-'}), "
        f"width slope={slope:.5g} (pred {predicted:.5g}, R2={r2:.6f})",
        "|tr|<2, match <1e-8 for n=4..10, slope within 5%",
    )


def envelope_samples(count: int = 2000, n: int = 4):
    """Real k where the n-superstructure is in a band: half in the defect band."""
    spec = golden_spec()
    mode, gap = golden_mode()
    rep = supercell.defect_band(spec, n, mode.k0, gap=gap)
    inner = np.linspace(rep.k_lo, rep.k_hi, count // 2 + 2)[1:-1]
    outer = []
    for k in np.linspace(0.05, gap.k_lo, 4 * count):
        pt = SpectralPoint(float(k), 0.0, Polarization.EPar)
        tt = matrix_power_product(cell_monodromy(spec, pt), defect_monodromy(spec, pt), n)
        if abs((tt[0, 0] + tt[1, 1]).real) < 2 - 1e-9:
            outer.append(float(k))
    step = max(1, len(outer) // (count - len(inner)))
    return [float(k) for k in inner] + outer[::step][: count - len(inner)]


def check_envelope() -> CheckResult:
    spec = golden_spec()
    n = 4
    samples = envelope_samples(2000, n)
    worst = -math.inf
    for k in samples:
        pt = SpectralPoint(k, 0.0, Polarization.EPar)
        tt = matrix_power_product(cell_monodromy(spec, pt), defect_monodromy(spec, pt), n)
        env = scattering.envelope(tt, k)
        for reps in (1, 2, 3, 5, 8):
            r = scattering.rt_direct(matrix_power(tt, reps), k).r
            worst = max(worst, abs(r) - env)
    vac = validate_crystal([(1.0, 1.0)], (0.8, [(0.8, 1.0)]))
    vac_worst = 0.0
    for k in np.linspace(0.05, 3.0, 500):
        if min(abs(math.sin(8.8 * k)), abs(math.sin(k))) < 1e-3:
            continue
        vac_worst = max(vac_worst, scattering.superstructure_envelope(vac, float(k), n))
    ok = len(samples) == 2000 and worst <= 1e-8 and vac_worst < 1e-12
    return CheckResult(
        11,
        "reflection envelope",
        ok,
        f"samples={len(samples)}, max(|r|-env)={worst:.3g}, vacuum max env={vac_worst:.3g}",
        "|r| <= env + 1e-8, vacuum env <1e-12",
    )


def check_band_invariance() -> CheckResult:
    from .io import band_rows, to_csv

    spec = golden_spec()
    other = validate_crystal(GOLDEN_CELL, (1.7, [(0.3, 9.0), (1.4, 1.5)]))
    ks = np.linspace(0.05, 2 * math.pi, 400)
    a = to_csv(band_rows(band_map(spec, ks, theta=0.0)))
    b = to_csv(band_rows(band_map(other, ks, theta=0.0)))
    mode, gap = golden_mode()
    k = gap.k_hi - 0.2 * gap.width  # far from the mode
    ns = list(range(10, 26))
    slope, _ = _loglinear(ns, [abs(scattering.reflect_analytic(spec, k, n).t) for n in ns])
    mu2 = abs(eigenbasis(cell_monodromy(spec, SpectralPoint(k, 0.0))).mu) ** 2
    rate = math.exp(slope)
    ok = a == b and abs(rate / mu2 - 1) < 0.05
    return CheckResult(
        12,
        "defect leaves bands unchanged",
        ok,
        f"band maps identical={a == b}, |t| decay rate={rate:.6g}, |mu|^2={mu2:.6g}",
        "identical maps, rate within 5%",
    )


CHECKS = {
    1: check_unimodularity,
    2: check_oracle_equivalence,
    3: check_energy,
    4: check_gauge,
    5: check_mode_detection,
    6: check_reflection_dip,
    7: check_pole_zero,
    8: check_gamma_ratio,
    9: check_circle,
    10: check_supercell,
    11: check_envelope,
    12: check_band_invariance,
}


def run_check(number: int) -> CheckResult:
    try:
        return CHECKS[number]()
    except Exception as exc:  # a crash is reported as a failed criterion
        return CheckResult(number, CHECKS[number].__name__, False, f"error: {exc!r}", "no exception")
