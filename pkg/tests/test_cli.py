import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from wulffkit.cli import EXIT_CHECK, EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, main
from wulffkit.gauge import EllipsoidalGauge
from wulffkit.scenario import validate_report

from conftest import SCENARIOS


@pytest.fixture
def scen(tmp_path):
    """Copy scenario files into a scratch directory so reports land there."""
    def get(name, sub=""):
        src = SCENARIOS / sub / f"{name}.json"
        dst = tmp_path / src.name
        shutil.copy(src, dst)
        return dst
    return get


def _read(path):
    return json.loads(path.read_text())


# --- run ----------------------------------------------------------------------------

def test_run_sphere(scen, capsys):
    path = scen("sphere")
    assert main(["run", str(path)]) == EXIT_OK
    rep = _read(path.with_name("sphere.report.json"))
    assert rep["hk_ratio"] == pytest.approx(1.0, abs=1e-3)
    assert rep["passed"]
    assert "hk_ratio" in capsys.readouterr().out


def test_run_tilted_cap_is_precondition_failure(scen, capsys):
    assert main(["run", str(scen("tilted_cap", "invalid"))]) == EXIT_PRECONDITION
    assert "InadmissibleSurface" in capsys.readouterr().err


def test_run_perturbed_hk_only(scen):
    path = scen("perturbed")
    assert main(["run", str(path), "--check", "hk"]) == EXIT_OK
    rep = _read(path.with_name("perturbed.report.json"))
    assert rep["hk_ratio"] > 1.001
    assert list(rep["checks"]) == ["hk"]


def test_run_check_failure_exit(tmp_path):
    doc = _read(SCENARIOS / "perturbed.json")
    doc["expect_equality"] = True
    p = tmp_path / "p.json"
    p.write_text(json.dumps(doc))
    assert main(["run", str(p), "--check", "hk"]) == EXIT_CHECK


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bogus=1),
    lambda d: d.update(version=2),
    lambda d: d.pop("gauge"),
    lambda d: d["surface"].update(center=[0.0, 0.0]),
    lambda d: d.update(resolution=2),
], ids=["unknown-field", "version", "missing-gauge", "bad-vector", "low-resolution"])
def test_run_parse_errors(tmp_path, mutate):
    doc = _read(SCENARIOS / "sphere.json")
    mutate(doc)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert main(["run", str(p)]) == EXIT_PARSE


def test_run_malformed_json(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{ not json")
    assert main(["run", str(p)]) == EXIT_PARSE
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_PARSE


def test_run_unknown_check(scen):
    assert main(["run", str(scen("sphere")), "--check", "hk,nonsense"]) == EXIT_PARSE


def test_run_overrides_and_out(scen, tmp_path):
    out = tmp_path / "custom.json"
    assert main(["run", str(scen("sphere")), "--check", "hk", "--check", "sweep",
                 "--resolution", "16", "--seed", "9", "--out", str(out)]) == EXIT_OK
    rep = _read(out)
    assert rep["resolution"] == 16 and rep["seed"] == 9
    assert set(rep["checks"]) == {"hk", "sweep"}


def test_report_is_byte_identical(scen, tmp_path):
    path = scen("cone_cap")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", str(path), "--out", str(a)])
    main(["run", str(path), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_report_schema_round_trip(scen):
    path = scen("hemisphere")
    main(["run", str(path)])
    doc = _read(path.with_name("hemisphere.report.json"))
    validate_report(doc)
    assert doc["schema_version"] == 1
    assert set(doc["tolerances"]) >= {"hk", "chain", "coverage", "admissibility"}


# --- batch ------------------------------------------------------------------------------

def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_batch_empty_dir(tmp_path, capsys):
    assert main(["batch", str(tmp_path)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 and lines[0].startswith("name,status")


def test_batch_rows_sorted_and_error_row(tmp_path):
    d = tmp_path / "suite"
    d.mkdir()
    for n in ("sphere", "circle_2d"):
        shutil.copy(SCENARIOS / f"{n}.json", d)
    (d / "b_broken.json").write_text("{")
    table = tmp_path / "table.csv"
    assert main(["batch", str(d), "--check", "hk", "--out", str(table)]) == EXIT_CHECK
    rows = _rows(table)
    assert [r[0] for r in rows[1:]] == ["b_broken", "circle_2d", "sphere"]
    assert rows[1][1] == "ERROR"
    assert rows[2][1] == rows[3][1] == "PASS"


def test_batch_threads_match_serial(tmp_path):
    d = tmp_path / "suite"
    d.mkdir()
    for n in ("sphere", "hemisphere", "circle_2d"):
        shutil.copy(SCENARIOS / f"{n}.json", d)
    serial, par = tmp_path / "s.csv", tmp_path / "p.csv"
    assert main(["batch", str(d), "--check", "hk,sweep", "--out", str(serial)]) == EXIT_OK
    assert main(["batch", str(d), "--check", "hk,sweep", "--threads", "2",
                 "--out", str(par)]) == EXIT_OK
    assert serial.read_bytes() == par.read_bytes()


# --- mesh ----------------------------------------------------------------------------------

def _obj(path):
    objs, faces, lines, verts = [], 0, [], 0
    for ln in path.read_text().splitlines():
        if ln.startswith("o "):
            objs.append(ln[2:])
        elif ln.startswith("v "):
            verts += 1
        elif ln.startswith("f "):
            faces += 1
        elif ln.startswith("l "):
            lines.append(ln)
    return objs, verts, faces, lines


def test_mesh_sphere_triangles(scen, tmp_path, capsys):
    out = tmp_path / "s.obj"
    assert main(["mesh", str(scen("sphere")), "--resolution", "16", "--out", str(out)]) == EXIT_OK
    objs, _, faces, _ = _obj(out)
    assert objs == ["surface"]
    assert faces == 2 * 16 * 16
    assert json.loads(capsys.readouterr().out)["cells"] == 2 * 16 * 16


def test_mesh_cap_has_boundary_object(scen, tmp_path):
    out = tmp_path / "h.obj"
    assert main(["mesh", str(scen("hemisphere")), "--resolution", "8", "--out", str(out)]) == EXIT_OK
    objs, _, _, lines = _obj(out)
    assert objs == ["surface", "boundary"]
    assert len(lines) == 1
    idx = lines[0].split()[1:]
    assert idx[0] == idx[-1]


def test_mesh_wulff_level_and_fields(scen, tmp_path, capsys):
    out, fields = tmp_path / "w.obj", tmp_path / "w.csv"
    assert main(["mesh", str(scen("ellipsoid_wulff")), "--resolution", "16", "--out", str(out),
                 "--fields", str(fields)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["wulff_level_error"] <= 1e-6
    rows = _rows(fields)
    assert rows[0] == ["x", "y", "z", "H_F", "kappa1_F", "kappa2_F", "F_nu"]
    data = np.array(rows[1:], float)
    np.testing.assert_allclose(data[:, 3], 2.0, atol=1e-8)
    # spot check: the OBJ vertices satisfy F°(x) = 1
    V = np.array([ln.split()[1:] for ln in out.read_text().splitlines() if ln.startswith("v ")], float)
    F = EllipsoidalGauge(np.diag([4.0, 1.0, 1.0]))
    assert np.max(np.abs(F.dual_gauge(V[::7]) - 1.0)) <= 1e-6


def test_mesh_planar(scen, tmp_path):
    out, fields = tmp_path / "c.obj", tmp_path / "c.csv"
    assert main(["mesh", str(scen("quarter_circle_2d")), "--resolution", "32", "--out", str(out),
                 "--fields", str(fields)]) == EXIT_OK
    objs, _, _, lines = _obj(out)
    assert objs == ["surface", "boundary"]
    assert _rows(fields)[0] == ["x", "y", "H_F", "kappa1_F", "F_nu"]


# --- gauge-check ------------------------------------------------------------------------------

def test_gauge_check_from_gauge_file(tmp_path, capsys):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"family": "ellipsoidal", "matrix": [[4, 0, 0], [0, 1, 0], [0, 0, 1]]}))
    assert main(["gauge-check", str(g), "--samples", "2000"]) == EXIT_OK
    res = json.loads(capsys.readouterr().out)
    assert res["convexity_margin"] == pytest.approx(0.5, abs=1e-6)
    assert res["monotonicity_min"] >= -1e-9
    assert res["passed"]


def test_gauge_check_from_scenario(tmp_path):
    out = tmp_path / "gc.json"
    assert main(["gauge-check", str(SCENARIOS / "capillary_cap.json"), "--samples", "1000",
                 "--out", str(out)]) == EXIT_OK
    assert _read(out)["gauge"]["family"] == "capillary"


def test_gauge_check_rejects_bad_gauge(tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"family": "nonsense"}))
    assert main(["gauge-check", str(g)]) == EXIT_PARSE


def test_console_entry_point(scen):
    path = scen("circle_2d")
    proc = subprocess.run([sys.executable, "-m", "wulffkit", "run", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "circle_2d: PASS" in proc.stdout
