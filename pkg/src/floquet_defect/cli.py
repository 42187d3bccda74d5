"""Command-line front end: ``floquet-defect <scenario> --config FILE``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import __version__, polezero, scattering, supercell
from .bands import EDGE_TOL, band_map, gap_containing
from .defect import MODE_RESIDUAL, dispersion, find_defect_modes
from .errors import ConfigError, FloquetDefectError, NumericalError
from .io import band_rows, render
from .medium import CrystalSpec, FixedAlpha, FixedTheta, Polarization, validate_crystal
from .transfer import SpectralPoint, cell_monodromy, defect_monodromy, matrix_power_product

log = logging.getLogger("floquet_defect")

SCENARIOS = ("bands", "modes", "sweep", "polezero", "supercell", "envelope")
TOP_KEYS = {"cell", "defect", "polarization", "slices_per_period", "tolerances", *SCENARIOS}
BLOCK_KEYS = {
    "bands": {"k_min", "k_max", "k_points", "alpha", "theta"},
    "modes": {"k_min", "k_max", "alpha", "theta", "scan_points"},
    "sweep": {"k_min", "k_max", "k_points", "theta", "n"},
    "polezero": {"k_min", "k_max", "theta", "n", "k0", "winding"},
    "supercell": {"k_min", "k_max", "theta", "n", "k0"},
    "envelope": {"k_min", "k_max", "k_points", "theta", "n"},
}
TOLERANCE_KEYS = {"edge", "mode_residual"}
EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 2, 3, 4


@dataclass
class RunConfig:
    crystal: CrystalSpec
    pol: Polarization
    scenario: str
    params: dict
    slices_per_period: int = 64
    tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _reject_unknown(mapping, allowed, where):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def load_config(raw: dict, scenario: str) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(raw, TOP_KEYS, "config")
    for key in ("cell", "defect"):
        if key not in raw:
            raise ConfigError(f"config: missing required key '{key}'")
    defect = raw["defect"]
    if not isinstance(defect, dict):
        raise ConfigError("defect: expected an object with 'width' and 'layers'")
    _reject_unknown(defect, {"width", "layers"}, "defect")
    spec = validate_crystal(raw["cell"], (defect.get("width", 0), defect.get("layers", [])))
    pol = Polarization.parse(raw.get("polarization", "E"))
    slices = raw.get("slices_per_period", 64)
    if not isinstance(slices, int) or slices < 1:
        raise ConfigError("slices_per_period must be a positive integer")
    tol = raw.get("tolerances", {})
    _reject_unknown(tol, TOLERANCE_KEYS, "tolerances")
    params = raw.get(scenario, {})
    if not isinstance(params, dict):
        raise ConfigError(f"{scenario}: expected an object")
    _reject_unknown(params, BLOCK_KEYS[scenario], scenario)
    try:
        params = _normalize_block(scenario, params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{scenario}: {exc}") from exc
    return RunConfig(spec, pol, scenario, params, slices, dict(tol), raw)


def _positive_int(value, name):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{name} must be a positive integer")
    return value


def _n_list(value, name):
    vals = value if isinstance(value, list) else [value]
    if not vals:
        raise ConfigError(f"{name} must not be empty")
    for v in vals:
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ConfigError(f"{name} entries must be nonnegative integers")
    return vals


def _normalize_block(scenario, p):
    out = dict(p)
    out.setdefault("k_min", 0.05)
    out.setdefault("k_max", 2 * math.pi)
    if not (0 < out["k_min"] < out["k_max"]):
        raise ConfigError(f"{scenario}: need 0 < k_min < k_max")
    if "alpha" in out and "theta" in out:
        raise ConfigError(f"{scenario}: give alpha or theta, not both")
    if "theta" in out:
        FixedTheta(float(out["theta"]))
    if scenario == "bands":
        out["k_points"] = _positive_int(out.get("k_points", 400), "bands.k_points")
        if "alpha" in out:
            alphas = out["alpha"] if isinstance(out["alpha"], list) else [out["alpha"]]
            if not alphas:
                raise ConfigError("bands.alpha must not be empty")
            for a in alphas:
                FixedAlpha(float(a))
            out["alpha"] = [float(a) for a in alphas]
        else:
            out.setdefault("theta", 0.0)
    elif scenario == "modes":
        out["scan_points"] = _positive_int(out.get("scan_points", 400), "modes.scan_points")
        if "alpha" in out:
            FixedAlpha(float(out["alpha"]))
        else:
            out.setdefault("theta", 0.0)
    else:
        out.setdefault("theta", 0.0)
    if scenario in ("sweep", "envelope"):
        out["k_points"] = _positive_int(out.get("k_points", 400), f"{scenario}.k_points")
        out["n"] = _n_list(out.get("n", 10), f"{scenario}.n")
    if scenario == "polezero":
        out["n"] = _n_list(out.get("n", list(range(6, 15))), "polezero.n")
        out.setdefault("winding", True)
    if scenario == "supercell":
        out["n"] = _n_list(out.get("n", list(range(4, 11))), "supercell.n")
    return out


# -- scenario workers (top level so they can be pickled) --------------------


def _map(func, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * jobs))))


def _band_row(spec, pol, edge, item):
    k, alpha = item
    return band_map(spec, [k], alphas=[alpha], pol=pol, tol=edge)[0]


def _sweep_row(spec, pol, theta, item):
    k, n = item
    row = {"k": k, "theta": theta, "n": n}
    try:
        res = scattering.reflect_analytic(spec, k, n, theta, pol)
    except FloquetDefectError:
        # band edges: the eigenbasis is singular, use the transfer-matrix route
        res = scattering.reflect_direct(spec, k, n, theta, pol)
    env = None
    try:
        env = scattering.superstructure_envelope(spec, k, n, theta, pol)
    except FloquetDefectError:
        pass
    row.update(
        re_r=res.r.real,
        im_r=res.r.imag,
        re_t=res.t.real,
        im_t=res.t.imag,
        abs_r=abs(res.r),
        abs_t=abs(res.t),
        energy_residual=res.energy_residual,
        envelope=env,
    )
    return row


def _envelope_row(spec, pol, theta, item):
    k, n = item
    pt = SpectralPoint(k, k * math.sin(theta), pol)
    tt = matrix_power_product(cell_monodromy(spec, pt), defect_monodromy(spec, pt), n)
    tr = (tt[0, 0] + tt[1, 1]).real
    env = None
    if abs(tr) < 2:
        env = scattering.envelope(tt, k * math.cos(theta))
    r = scattering.rt_direct(tt, k * math.cos(theta)).r
    return {"k": k, "n": n, "trace": tr, "envelope": env, "abs_r": abs(r)}


def _pair_row(spec, pol, theta, winding, item):
    k0, gap_width, n = item
    pair = polezero.find_pair(spec, theta, n, k0, pol, gap_width=gap_width)
    sp = scattering.structure_point(spec, k0, theta, pol)
    closed = polezero.gamma_closed_form(sp.coeffs, sp.chi)
    wp = wq = None
    if winding:
        wp, wq = polezero.pair_winding(spec, theta, n, k0, pol)
    return {
        "k0": k0,
        "n": n,
        "re_k_zero": pair.k_zero.real,
        "im_k_zero": pair.k_zero.imag,
        "re_k_pole": pair.k_pole.real,
        "im_k_pole": pair.k_pole.imag,
        "delta_n": pair.delta_n,
        "gamma_n": pair.gamma_n,
        "gamma_closed_form_re": closed.real,
        "gamma_closed_form_im": closed.imag,
        "winding_p": wp,
        "winding_q": wq,
    }


def _supercell_row(spec, pol, theta, item):
    k0, mu, n = item
    rep = supercell.defect_band(spec, n, k0, theta, pol)
    return {
        "k0": k0,
        "n": n,
        "k_lo": rep.k_lo,
        "k_hi": rep.k_hi,
        "width": rep.width,
        "log_width": math.log(rep.width) if rep.width > 0 else None,
        "predicted_slope": 2 * math.log(abs(mu)),
    }


def _incidence(params):
    if "alpha" in params and not isinstance(params["alpha"], list):
        return FixedAlpha(float(params["alpha"]))
    return FixedTheta(float(params.get("theta", 0.0)))


def _modes(cfg: RunConfig):
    p = cfg.params
    return find_defect_modes(
        cfg.crystal,
        _incidence(p),
        (p["k_min"], p["k_max"]),
        cfg.pol,
        scan_points=p.get("scan_points", 400),
        residual_tol=cfg.tolerances.get("mode_residual", MODE_RESIDUAL),
    )


def _seed_modes(cfg: RunConfig):
    p = cfg.params
    theta = float(p["theta"])
    if "k0" in p:
        k0 = float(p["k0"])
        gap = gap_containing(cfg.crystal, k0, FixedTheta(theta), cfg.pol)
        if abs(dispersion(cfg.crystal, k0, k0 * math.sin(theta), cfg.pol)) > 1e-6:
            raise NumericalError(f"k0={k0} is not a defect mode")
        return [(k0, gap.width, polezero.anchor_multiplier(cfg.crystal, theta, cfg.pol, k0).real)]
    return [
        (m.k0, m.gap_hi - m.gap_lo, m.mu)
        for m in _modes(cfg)
        if m.scatterable
    ]


def execute(cfg: RunConfig, jobs: int = 1) -> list[dict]:
    """Run one scenario and return its rows in deterministic grid order."""
    p, spec, pol = cfg.params, cfg.crystal, cfg.pol
    scen = cfg.scenario
    if scen == "bands":
        ks = np.linspace(p["k_min"], p["k_max"], p["k_points"])
        if "alpha" in p:
            grid = [(float(k), a) for a in p["alpha"] for k in ks]
        else:
            line = FixedTheta(float(p["theta"]))
            grid = [(float(k), float(line.alpha_at(k))) for k in ks]
        edge = cfg.tolerances.get("edge", EDGE_TOL)
        return band_rows(_map(partial(_band_row, spec, pol, edge), grid, jobs))
    if scen == "modes":
        return [m.as_record() for m in _modes(cfg)]
    theta = float(p["theta"])
    if scen == "sweep":
        ks = np.linspace(p["k_min"], p["k_max"], p["k_points"])
        grid = [(float(k), n) for n in p["n"] for k in ks]
        return _map(partial(_sweep_row, spec, pol, theta), grid, jobs)
    if scen == "envelope":
        ks = np.linspace(p["k_min"], p["k_max"], p["k_points"])
        grid = [(float(k), n) for n in p["n"] for k in ks]
        return _map(partial(_envelope_row, spec, pol, theta), grid, jobs)
    seeds = _seed_modes(cfg)
    if scen == "polezero":
        grid = [(k0, width, n) for k0, width, _ in seeds for n in p["n"]]
        return _map(partial(_pair_row, spec, pol, theta, bool(p["winding"])), grid, jobs)
    if scen == "supercell":
        grid = [(k0, mu, n) for k0, _, mu in seeds for n in p["n"]]
        return _map(partial(_supercell_row, spec, pol, theta), grid, jobs)
    raise ConfigError(f"unknown scenario {scen!r}")


def _verify(args) -> int:
    from .verification import CHECKS, run_check

    results = _map(run_check, sorted(CHECKS), args.jobs)
    rows = [
        {
            "criterion": r.number,
            "name": r.name,
            "passed": r.passed,
            "measured": r.measured,
            "target": r.target,
        }
        for r in results
    ]
    for r in results:
        print(r.line(), file=sys.stderr)
    _emit(render(rows, args.format), args.out)
    return 0 if all(r.passed for r in results) else 1


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _write_manifest(out, cfg: RunConfig, elapsed: float):
    manifest = {
        "tool": "floquet-defect",
        "version": __version__,
        "scenario": cfg.scenario,
        "config": cfg.raw,
        "wall_time_s": elapsed,
    }
    with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquet-defect",
        description="Transfer-matrix analysis of a 1D periodic medium with one defect.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*SCENARIOS, "verify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=(name != "verify"), help="JSON config file")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.format is None:
        args.format = "json" if args.command == "modes" else "csv"
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            return _verify(args)
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        cfg = load_config(raw, args.command)
        start = time.perf_counter()
        rows = execute(cfg, args.jobs)
        elapsed = time.perf_counter() - start
        _emit(render(rows, args.format), args.out)
        if args.out is not None:
            _write_manifest(args.out, cfg, elapsed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
