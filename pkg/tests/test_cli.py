import json
import subprocess
import sys

import numpy as np
import pytest

from conelift import io
from conelift.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def circle(tmp_path, capsys):
    assert _run(capsys, "gen", "circle-n2", "--out", str(tmp_path))[0] == 0
    return tmp_path


def test_gen_circle_files(tmp_path, capsys):
    code, out, _ = _run(capsys, "gen", "circle-n2", "--nodes", "16", "--out", str(tmp_path))
    assert code == 0
    phi1 = io.chart_from_json(io.read_json(tmp_path / "circle_phi1.json"))
    phi2 = io.chart_from_json(io.read_json(tmp_path / "circle_phi2.json"))
    assert phi1.shape == (16,) and phi2.shape == (16,)
    np.testing.assert_allclose(phi1.values[:, 0], 2.0)
    np.testing.assert_allclose(phi2.values[:, 0], 1.0)
    g = io.metric_from_json(io.read_json(tmp_path / "circle_metric.json"), phi1)
    np.testing.assert_array_equal(g, 4.0)
    assert "circle_phi1.json" in out


def test_gen_sphere_identity(tmp_path, capsys):
    assert _run(capsys, "gen", "sphere-identity", "--n", "3", "--out", str(tmp_path))[0] == 0
    chart = io.chart_from_json(io.read_json(tmp_path / "sphere_identity.json"))
    assert chart.target == "cone" and np.all(chart.values[..., 0] == 1)


def test_gen_unknown_fixture(capsys):
    assert _run(capsys, "gen", "torus")[0] == 1


def test_verify(circle, tmp_path, capsys):
    code, out, _ = _run(capsys, "verify", str(circle / "circle_phi1.json"))
    assert code == 0 and json.loads(out)["pass"]
    wrong = {"m": 1, "shape": [512], "metric": [[1.0]] * 512}
    (tmp_path / "wrong.json").write_text(json.dumps(wrong))
    code, out, _ = _run(capsys, "verify", str(circle / "circle_phi1.json"), "--metric", str(tmp_path / "wrong.json"))
    assert code == 2 and not json.loads(out)["pass"]
    code, _, err = _run(capsys, "verify", str(tmp_path / "missing.json"))
    assert code == 1 and "missing.json" in err


def test_verify_malformed_names_field(tmp_path, capsys):
    (tmp_path / "bad.json").write_text(json.dumps({"m": 1, "n": 2, "target": "cone", "shape": [4]}))
    code, _, err = _run(capsys, "verify", str(tmp_path / "bad.json"))
    assert code == 1 and "'values'" in err
    (tmp_path / "junk.json").write_text("{not json")
    assert _run(capsys, "verify", str(tmp_path / "junk.json"))[0] == 1


def test_recover_tau_pair(tmp_path, capsys):
    assert _run(capsys, "gen", "tau-pair", "--seed", "7", "--n", "4", "--out", str(tmp_path))[0] == 0
    tau0 = io.matrix_from_json(io.read_json(tmp_path / "tau0.json"))
    code, out, _ = _run(capsys, "recover", str(tmp_path / "tau_pairs.json"))
    rep = json.loads(out)
    assert code == 0 and rep["status"] == "unique"
    assert np.max(np.abs(np.array(rep["tau"]) - tau0)) <= 1e-8
    code, out, _ = _run(capsys, "recover", str(tmp_path / "tau_chart1.json"), str(tmp_path / "tau_chart2.json"), "--locality")
    rep = json.loads(out)
    assert code == 0 and rep["recovery"]["status"] == "unique" and rep["locality"]["constant"]
    assert np.max(np.abs(np.array(rep["recovery"]["tau"]) - tau0)) <= 1e-8


def test_recover_circle_and_ray(circle, tmp_path, capsys):
    code, out, _ = _run(capsys, "recover", str(circle / "circle_pairs.json"))
    assert code == 3 and json.loads(out)["status"] == "inconsistent"
    code, out, _ = _run(capsys, "recover", str(circle / "circle_phi1.json"), str(circle / "circle_phi2.json"),
                        str(circle / "circle_metric.json"))
    assert code == 3
    assert _run(capsys, "gen", "single-ray", "--out", str(tmp_path))[0] == 0
    code, out, _ = _run(capsys, "recover", str(tmp_path / "single_ray_pairs.json"))
    assert code == 4 and json.loads(out)["span_rank"] == 1


def test_recover_sphere_pairs(tmp_path, capsys):
    _run(capsys, "gen", "nonconformal-pair", "--out", str(tmp_path))
    code, out, _ = _run(capsys, "recover", str(tmp_path / "nonconformal_pairs.json"))
    assert code == 3 and json.loads(out)["status"] == "inconsistent"


def test_recover_usage(tmp_path, capsys):
    assert _run(capsys, "recover", "a", "b", "c", "d")[0] == 1
    assert _run(capsys, "recover")[0] == 1
    assert _run(capsys, "recover", "x.json", "--tol", "-1")[0] == 1


def test_tolerance_env_and_flag(tmp_path, capsys, monkeypatch):
    _run(capsys, "gen", "tau-pair", "--seed", "3", "--n", "3", "--out", str(tmp_path))
    pairs = str(tmp_path / "tau_pairs.json")
    monkeypatch.setenv("CONELIFT_TOL", "1e-30")
    assert _run(capsys, "recover", pairs)[0] == 3
    assert _run(capsys, "recover", pairs, "--tol", "1e-9")[0] == 0
    monkeypatch.setenv("CONELIFT_TOL", "abc")
    assert _run(capsys, "recover", pairs)[0] == 1


def test_reports_are_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        _run(capsys, "gen", "tau-pair", "--seed", "11", "--n", "3", "--out", str(tmp_path / d))
    for d in ("a", "b"):
        _run(capsys, "recover", str(tmp_path / d / "tau_pairs.json"), "--out", str(tmp_path / f"{d}.json"))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a" / "tau_chart1.json").read_bytes() == (tmp_path / "b" / "tau_chart1.json").read_bytes()


def test_residuals_are_decimal_strings(tmp_path, capsys):
    _run(capsys, "gen", "tau-pair", "--seed", "1", "--n", "3", "--out", str(tmp_path))
    rep = json.loads(_run(capsys, "recover", str(tmp_path / "tau_pairs.json"))[1])
    assert isinstance(rep["max_point_residual"], str)
    assert float(rep["max_point_residual"]) < 1e-9
    assert all(isinstance(v, str) for k, v in rep["lorentz_residuals"].items() if k.startswith("residual"))


@pytest.mark.parametrize("variant, code", [("tau", 0), ("identity", 0), ("twisted", 3)])
def test_extend(tmp_path, capsys, variant, code):
    _run(capsys, "gen", "cone-selfmap", "--variant", variant, "--seed", "2", "--out", str(tmp_path))
    got, out, _ = _run(capsys, "extend", str(tmp_path / "selfmap.json"))
    assert got == code
    rep = json.loads(out)
    if variant == "identity":
        np.testing.assert_allclose(rep["tau"], np.eye(4), atol=1e-12)
    if variant == "twisted":
        assert rep["stage"] == "t-independence"
    if variant == "tau":
        tau0 = io.matrix_from_json(io.read_json(tmp_path / "selfmap_tau0.json"))
        np.testing.assert_allclose(rep["tau"], tau0, atol=1e-8)


def test_embed_and_project(tmp_path, capsys):
    src = tmp_path / "p.json"
    src.write_text(json.dumps({"k": 0, "n": 3, "points": [[2.0, 2.0, 0.0, 0.0], [5.0, 3.0, 4.0, 0.0]]}))
    code, out, _ = _run(capsys, "embed", str(src), "--to", "1", "--out", str(tmp_path / "p1.json"))
    assert code == 0
    doc = io.read_json(tmp_path / "p1.json")
    assert doc["k"] == 1 and doc["points"][0] == [2.0, 2.0, 0.0, 0.0, 1.0]
    assert all(float(r) == 0 for r in doc["quadric_residuals"])
    code, out, _ = _run(capsys, "embed", str(tmp_path / "p1.json"), "--to", "0")
    assert code == 0 and json.loads(out)["points"] == json.loads(src.read_text())["points"]
    code, out, _ = _run(capsys, "project", str(src))
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["points"], [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0]])


def test_embed_off_cone(tmp_path, capsys):
    src = tmp_path / "p.json"
    src.write_text(json.dumps({"k": 0, "n": 2, "points": [[1.0, 1.0, 0.0], [1.0, 2.0, 0.0], [3.0, 0.0, 3.0], [1.0, 0.0, 0.0]]}))
    code, out, err = _run(capsys, "embed", str(src), "--to", "-1")
    assert code == 2 and json.loads(out)["invalid_indices"] == [1, 3]
    assert _run(capsys, "project", str(src))[0] == 2


def test_lift(tmp_path, capsys):
    from conelift.fixtures import circle_psi

    psi = circle_psi(512, 1)
    (tmp_path / "psi.json").write_text(io.dumps(io.chart_to_json(psi)))
    code, out, _ = _run(capsys, "lift", str(tmp_path / "psi.json"), "--k", "1", "--out", str(tmp_path / "phi.json"))
    assert code == 0
    chart = io.chart_from_json(io.read_json(tmp_path / "phi.json"))
    assert chart.k == 1
    np.testing.assert_allclose(chart.values[:, 0], 2.0, rtol=1e-4)
    assert _run(capsys, "verify", str(tmp_path / "phi.json"))[0] == 0
    bad = {"m": 1, "shape": [512], "metric": [[1.0 + 0.5 * np.cos(t)] for t in np.linspace(0, 2 * np.pi, 512, endpoint=False)]}
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    # a varying metric is still conformal on a curve: a 1-d chart is always liftable
    assert _run(capsys, "lift", str(tmp_path / "psi.json"), "--metric", str(tmp_path / "bad.json"))[0] == 0


def test_lift_nonconformal(tmp_path, capsys):
    from conelift.grid import sphere_chart

    psi = sphere_chart(3, (24, 48))
    psi.metric = psi.metric.copy()
    psi.metric[..., 0, 0] *= 3.0
    (tmp_path / "psi.json").write_text(io.dumps(io.chart_to_json(psi)))
    code, out, _ = _run(capsys, "lift", str(tmp_path / "psi.json"))
    assert code == 2 and not json.loads(out)["pass"]


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "conelift", "gen", "single-ray", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    proc = subprocess.run(
        [sys.executable, "-m", "conelift", "recover", str(tmp_path / "single_ray_pairs.json")], capture_output=True, text=True
    )
    assert proc.returncode == 4
    proc = subprocess.run([sys.executable, "-m", "conelift", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1
