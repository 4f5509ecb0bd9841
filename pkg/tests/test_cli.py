import json

import pytest

from loopshrink import generate_genus_g, generate_sphere, generate_torus
from loopshrink.cli import EXIT_ERROR, EXIT_OK, EXIT_WARN, run
from loopshrink.meshio import write_off


@pytest.fixture(scope="module")
def meshes(tmp_path_factory):
    d = tmp_path_factory.mktemp("meshes")
    write_off(d / "torus.off", generate_torus(16, 8))
    write_off(d / "sphere.off", generate_sphere(3))
    write_off(d / "genus2.off", generate_genus_g(2))
    return d


def report(out, stem):
    return json.loads((out / f"{stem}.report.json").read_text())


def test_torus_loops(meshes, tmp_path):
    assert run(["--input", str(meshes / "torus.off"), "--mode", "loops", "-o", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path, "torus")
    assert r["genus"] == 1 and r["pair_count"] == 1
    loops = json.loads((tmp_path / "torus.loops.json").read_text())
    assert len(loops["pairs"]) == r["pair_count"]
    obj = (tmp_path / "torus.loops.obj").read_text()
    assert obj.count("\nl ") + obj.startswith("l ") == 2
    assert not (tmp_path / "torus.reeb.dot").exists()


def test_sphere_reeb(meshes, tmp_path):
    assert run(["--input", str(meshes / "sphere.off"), "--mode", "reeb", "-o", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path, "sphere")
    assert r["pairs"] == [] and r["reeb"]["nodes"] == 2
    assert (tmp_path / "sphere.reeb.dot").exists() and (tmp_path / "sphere.reeb.obj").exists()


def test_skip_refine_uses_estimates(meshes, tmp_path):
    assert run(["--input", str(meshes / "genus2.off"), "--skip-refine", "-o", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path, "genus2")
    assert r["pair_count"] == 2
    for p in r["pairs"]:
        assert p["handle_length"] == p["estimate_length"]
    assert r["steps"]["handle"] == [0, 0]


def test_report_reproducible(meshes, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["--input", str(meshes / "torus.off"), "-o", str(out)]) == EXIT_OK
    ra, rb = report(a, "torus"), report(b, "torus")
    ra.pop("timings"), rb.pop("timings")
    ra.pop("input"), rb.pop("input")
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)
    assert (a / "torus.loops.json").read_bytes() == (b / "torus.loops.json").read_bytes()


def test_config_file_and_override(meshes, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# calibration\ncheck-interval = 2\nmode = reeb\nseed_vertex = 5\n")
    assert run(["--input", str(meshes / "torus.off"), "--config", str(cfg), "--seed-vertex", "7", "-o", str(tmp_path)]) == EXIT_OK
    r = report(tmp_path, "torus")
    assert r["config"]["diffusion"]["check_interval"] == 2
    assert r["config"]["mode"] == "reeb" and r["config"]["seed_vertex"] == 7


def test_snapshots_flag(meshes, tmp_path):
    assert run(["--input", str(meshes / "torus.off"), "--mode", "reeb", "--snapshots", "40", "-o", str(tmp_path)]) == EXIT_OK
    assert sorted(tmp_path.glob("torus.step*.ply"))


def test_error_exit_codes(meshes, tmp_path):
    assert run(["--input", str(tmp_path / "nope.off")]) == EXIT_ERROR
    assert run([]) == EXIT_ERROR
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert run(["--input", str(meshes / "torus.off"), "--config", str(bad)]) == EXIT_ERROR
    assert run(["--input", str(meshes / "torus.off"), "--seed-vertex", "99999", "-o", str(tmp_path)]) == EXIT_ERROR


def test_warning_exit_code(meshes, tmp_path):
    # checking only every 200 steps misses the split and merge entirely
    code = run(["--input", str(meshes / "torus.off"), "--check-interval", "200", "-o", str(tmp_path)])
    assert code == EXIT_WARN
    r = report(tmp_path, "torus")
    assert r["pair_count"] == 0 and any("genus is 1" in w for w in r["warnings"])


def test_module_entry(meshes, tmp_path):
    import subprocess
    import sys

    p = subprocess.run([sys.executable, "-m", "loopshrink", "--input", str(meshes / "sphere.off"), "--mode", "reeb", "-o", str(tmp_path)], capture_output=True, text=True)
    assert p.returncode == 0
    assert "genus 0, 0 pairs" in p.stderr
