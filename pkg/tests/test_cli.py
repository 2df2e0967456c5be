import json

import numpy as np
import pytest

from slopekit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(
        {"grid": {"dim": 1, "center": [0.0], "radius": 2.0, "h": 0.25}}))
    return str(path)


def test_slope_subcommand(capsys, grid_file):
    code, out, _ = run(capsys, "slope", "--space", grid_file,
                       "--field", "quad_bowl_1d", "--point", "1.0",
                       "--eps", "0.5")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(0.875)
    assert doc["witness"] == "(0.75)"
    assert doc["resolution"] == 0.5


def test_slope_exact_on_finite_space(capsys, tmp_path):
    path = tmp_path / "space.json"
    path.write_text(json.dumps({
        "points": ["a", "b", "c"],
        "dist": [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]],
        "fields": {"f": [0.0, 0.4, 1.0]},
    }))
    code, out, _ = run(capsys, "slope", "--space", str(path), "--field", "f",
                       "--point", "b")
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == 0.0 and doc["resolution"] == "exact"


def test_ekeland_subcommand(capsys, tmp_path):
    path = tmp_path / "space.json"
    path.write_text(json.dumps({
        "points": ["a", "b", "c"],
        "dist": [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]],
        "fields": {"f": [0.0, 0.4, 1.0]},
    }))
    code, out, _ = run(capsys, "ekeland", "--space", str(path), "--field", "f",
                       "--start", "c", "--lambda", "0.5")
    assert code == 0
    doc = json.loads(out)
    assert doc["point"] == "a" and doc["verified"]
    assert doc["decrease_margin"] >= 0
    assert doc["strict_min_margin"] >= 0


def test_orbit_subcommand(capsys, tmp_path):
    n = 21
    x = np.linspace(-1.0, 1.0, n)
    f = 4.0 * np.abs(x) - 0.1 * x ** 2
    slope_f = np.where(np.abs(x) > 1e-12, 4.0 - 0.2 * np.abs(x), 0.0)
    D = np.abs(x[:, None] - x[None, :])
    path = tmp_path / "space.json"
    path.write_text(json.dumps({
        "points": [f"x{i}" for i in range(n)],
        "dist": D.tolist(),
        "fields": {"f": f.tolist(), "g": [0.0] * n,
                   "slope_f": slope_f.tolist(), "slope_g": [0.0] * n},
    }))
    code, out, _ = run(capsys, "orbit", "--space", str(path),
                       "--map", "determination", "--start", "x0",
                       "--center", "x10", "--eps", "0.5", "--c", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["termination"] == "empty_set"
    assert doc["points"][-1] == "x10"
    assert doc["length_bound"]["within_bound"]
    assert all("s1" in d and "s2" in d and "s3" in d for d in doc["diagnostics"])


def test_plr_check_pass_fail_and_exit_codes(capsys):
    code, out, _ = run(capsys, "plr-check", "--catalog", "neg_square_1d",
                       "--center", "0", "--c", "1", "--delta", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"]
    assert doc["constants"] == {"c_prime": 6.0, "delta_prime": 1.0 / 9.0,
                                "delta_hat": 1.0 / 18.0}
    code, out, _ = run(capsys, "plr-check", "--catalog", "neg_square_1d",
                       "--center", "0", "--c", "0.1", "--delta", "2")
    assert code == 1
    assert json.loads(out)["violations"]


def test_plr_check_invalid_c_is_input_error(capsys):
    code, _, err = run(capsys, "plr-check", "--catalog", "quad_bowl_1d",
                       "--center", "0", "--c", "0", "--delta", "1")
    assert code == 2
    assert "input error" in err


def test_series_check_exit_codes(capsys, tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"a": [0.5, 0.25, 0.125],
                                "b": [1.0, 1.1, 1.15, 1.17]}))
    code, out, _ = run(capsys, "series-check", "--file", str(good), "--c", "1")
    assert code == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "a": [0.5, 0.25, 0.125, 0.0625, 0.03125],
        "b": [1.0, 1.1, 1.2, 1.25, 9.0, 9.1]}))
    code, out, _ = run(capsys, "series-check", "--file", str(bad), "--c", "1")
    assert code == 1
    assert json.loads(out)["first_violation_index"] == 3


def test_malformed_json_reports_line_and_column(capsys, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"a": [1,\n 2,]}')
    code, _, err = run(capsys, "series-check", "--file", str(broken), "--c", "1")
    assert code == 2
    assert "line 2" in err and "column" in err


def test_unknown_keys_rejected(capsys, tmp_path):
    f = tmp_path / "seq.json"
    f.write_text(json.dumps({"a": [0.1], "b": [1.0, 1.0], "c": 3}))
    code, _, err = run(capsys, "series-check", "--file", str(f), "--c", "1")
    assert code == 2


def test_sharp_min_subcommand(capsys):
    code, out, _ = run(capsys, "sharp-min", "--catalog", "neg_square_1d",
                       "--center", "0", "--c", "1", "--delta", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["constants"]["delta_prime"] == 1.0 / 9.0
    assert doc["min_slope"] >= 1.0 - 1e-6


def test_determine_builtin_instance(capsys, tmp_path):
    report_path = tmp_path / "r.json"
    csv_path = tmp_path / "r.csv"
    dat_path = tmp_path / "r.dat"
    png_path = tmp_path / "r.png"
    code, out, _ = run(capsys, "determine", "--instance", "shift_2p5",
                       "--report", str(report_path), "--csv", str(csv_path),
                       "--plot-data", str(dat_path), "--plot", str(png_path),
                       "--n-centers", "1")
    assert code == 0
    doc = json.loads(report_path.read_text())
    assert doc["a"] == 2.5
    assert doc["passed"]
    header = csv_path.read_text().splitlines()[0]
    assert header == "point,f,g,f_minus_g_minus_a,slope_f,slope_g"
    first = dat_path.read_text().splitlines()[0].split()
    assert len(first) == 2 and float(first[0]) > 0
    assert png_path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_determine_negative_control_passes_as_expected(capsys):
    code, out, _ = run(capsys, "determine", "--instance", "neg_kink")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "rejected"


def test_determine_byte_stable_for_fixed_seed(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "determine", "--instance", "ident_negsq_1d",
                         "--report", str(path), "--seed", "7",
                         "--n-centers", "1")
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_determine_refine_is_monotone(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = run(capsys, "determine", "--instance", "ident_negsq_1d",
                     "--report", str(path), "--refine", "2",
                     "--h", "0.04", "--n-centers", "1")
    assert code == 0
    curve = json.loads(path.read_text())["refinement"]
    devs = [d for _, d in curve]
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_determine_custom_instance_file(capsys, tmp_path):
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps({
        "id": "custom",
        "f": {"form": "add_const",
              "inner": {"form": "quadratic", "dim": 1, "a": 1.0}, "const": 1.0},
        "g": {"form": "quadratic", "dim": 1, "a": 1.0},
        "xbar": [0.0], "c": 1.0, "delta": 1.0,
        "expected": {"equal_up_to_constant": True, "a": 1.0},
    }))
    code, out, _ = run(capsys, "determine", "--instance", str(inst),
                       "--n-centers", "1")
    assert code == 0
    assert json.loads(out)["a"] == 1.0


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog-list")
    assert code == 0
    doc = json.loads(out)
    ids = {e["id"] for e in doc["fields"]}
    assert "quad_bowl_1d" in ids and "composite_2d" in ids
    inst_ids = {e["id"] for e in doc["instances"]}
    assert "shift_2p5" in inst_ids and "neg_scaled" in inst_ids


def test_threads_flag_accepted(capsys):
    code, _, _ = run(capsys, "catalog-list", "--threads", "4")
    assert code == 0
