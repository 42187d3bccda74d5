import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from floquet_defect.cli import execute, load_config, main
from floquet_defect.errors import ConfigError
from floquet_defect.scattering import reflect_direct

from conftest import GAP1, GOLDEN_CELL, K0

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = {
    "cell": [list(x) for x in GOLDEN_CELL],
    "defect": {"width": 0.8, "layers": [[0.8, 2.25]]},
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, scenario, cfg, *extra):
    out = tmp_path / f"{scenario}.out"
    code = main([scenario, "--config", write(tmp_path, cfg), "--out", str(out), "--jobs", "1", *extra])
    return code, out


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_bands_vacuum_has_no_gap(tmp_path):
    cfg = {"cell": [[1.0, 1.0]], "defect": {"width": 0.5, "layers": [[0.5, 1.0]]},
           "bands": {"k_min": 0.1, "k_max": 3.0, "k_points": 200}}
    code, out = run(tmp_path, "bands", cfg)
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["k", "alpha", "trace", "class"]
    assert len(data) == 200
    assert not [r for r in data if r["class"] == "gap"]


def test_sweep_dips_at_mode(tmp_path):
    cfg = dict(GOLDEN, sweep={"k_min": GAP1[0] + 0.01, "k_max": GAP1[1] - 0.01, "k_points": 301, "n": 10})
    code, out = run(tmp_path, "sweep", cfg)
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["k", "theta", "n", "re_r", "im_r", "re_t", "im_t",
                             "abs_r", "abs_t", "energy_residual", "envelope"]
    ks = np.array([float(r["k"]) for r in data])
    ar = np.array([float(r["abs_r"]) for r in data])
    i = int(np.argmin(ar))
    assert abs(ks[i] - K0) <= ks[1] - ks[0]
    # oracle: the library sweep through the transfer-matrix route
    for j in (0, i, len(ks) - 1):
        assert ar[j] == pytest.approx(abs(reflect_direct_spec(ks[j]).r), abs=1e-9)


def reflect_direct_spec(k):
    from floquet_defect import validate_crystal

    return reflect_direct(validate_crystal(GOLDEN_CELL, (0.8, [(0.8, 2.25)])), k, 10)


def test_negative_thickness_exit_2(tmp_path, capsys):
    cfg = {"cell": [[1.5, 4.0], [-0.5, 1.0]], "defect": {"width": 0.8, "layers": [[0.8, 2.25]]}}
    code, _ = run(tmp_path, "bands", cfg)
    assert code == 2
    assert "cell[1].thickness" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"colour": 1}, "colour"),
        ({"bands": {"k_pts": 3}}, "k_pts"),
        ({"tolerances": {"edgy": 1}}, "edgy"),
        ({"bands": {"k_min": 3.0, "k_max": 1.0}}, "k_min"),
        ({"bands": {"theta": 2.0}}, "theta"),
        ({"polarization": "Q"}, "Q"),
    ],
)
def test_config_errors_name_field(tmp_path, capsys, patch, field):
    code, _ = run(tmp_path, "bands", {**GOLDEN, **patch})
    assert code == 2
    assert field in capsys.readouterr().err


def test_invalid_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["bands", "--config", str(p)]) == 2


def test_io_error_exit_4(tmp_path):
    code = main(["bands", "--config", write(tmp_path, GOLDEN), "--out", str(tmp_path / "no" / "x.csv")])
    assert code == 4


def test_numerical_error_exit_3(tmp_path, capsys):
    cfg = dict(GOLDEN, supercell={"k0": 2.1})  # gap point, not a mode
    code, _ = run(tmp_path, "supercell", cfg)
    assert code == 3
    assert "2.1" in capsys.readouterr().err


def test_modes_json(tmp_path):
    code, out = run(tmp_path, "modes", GOLDEN)
    assert code == 0
    data = json.loads(out.read_text())
    assert [round(m["k0"], 10) for m in data] == [round(K0, 10), 4.1123698177]
    assert set(data[0]) == {"k0", "alpha0", "theta0", "gap_index", "residual"}


def test_manifest(tmp_path):
    code, out = run(tmp_path, "modes", GOLDEN)
    man = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert man["config"] == GOLDEN
    assert man["scenario"] == "modes"
    assert man["version"]
    assert man["wall_time_s"] >= 0


def test_deterministic_across_jobs(tmp_path):
    cfg = dict(GOLDEN, bands={"k_points": 120, "alpha": [0.0, 0.4]},
               supercell={"n": [4, 6]}, envelope={"k_min": 1.83, "k_max": 1.85, "k_points": 50, "n": [4]})
    cfg_path = write(tmp_path, cfg)
    for scen in ("bands", "supercell", "envelope"):
        outs = []
        for jobs in ("1", "3", "1"):
            out = tmp_path / f"{scen}{jobs}{len(outs)}.csv"
            assert main([scen, "--config", cfg_path, "--out", str(out), "--jobs", jobs]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]


def test_polezero_rows(tmp_path):
    cfg = dict(GOLDEN, polezero={"n": [8], "winding": True}, modes={"k_max": 3.0})
    cfg["polezero"]["k0"] = K0
    code, out = run(tmp_path, "polezero", cfg)
    assert code == 0
    (row,) = rows(out)
    assert (row["winding_p"], row["winding_q"]) == ("1", "1")
    assert float(row["im_k_pole"]) < 0


def test_supercell_rows(tmp_path):
    cfg = dict(GOLDEN, supercell={"n": [4, 8], "k_max": 3.0})
    code, out = run(tmp_path, "supercell", cfg)
    data = rows(out)
    assert code == 0 and len(data) == 2
    assert float(data[1]["width"]) < float(data[0]["width"])


def test_execute_is_a_library_call():
    cfg = load_config(dict(GOLDEN, envelope={"k_min": 1.84, "k_max": 1.843, "k_points": 3, "n": [4]}), "envelope")
    out = execute(cfg)
    assert [r["k"] for r in out] == [1.84, 1.8415, 1.843]
    with pytest.raises(ConfigError):
        load_config(dict(GOLDEN, sweep={"n": []}), "sweep")


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "floquet_defect", "modes", "--config", str(ROOT / "configs" / "golden.json")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)[0]["gap_index"] == 0
