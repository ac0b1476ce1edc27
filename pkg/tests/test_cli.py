import csv
import io
import json

import numpy as np
import pytest

from heisurf import cli
from heisurf import config as cf

SADDLE = {"kind": "saddle", "n": 2}
GEO_PHI = [{"coeff": 0.1, "exps": [0, 2, 0, 0]}, {"coeff": 0.05, "exps": [0, 0, 0, 1]}]
BOX4 = {"lo": [-5, -5, -5, -5], "hi": [5, 5, 5, 5]}


@pytest.fixture
def run(tmp_path, capsys):
    def go(command, cfg=None, *flags):
        argv = [command]
        if cfg is not None:
            path = tmp_path / "cfg.json"
            path.write_text(json.dumps(cfg))
            argv += ["--config", str(path)]
        argv += list(flags)
        code = cli.main(argv)
        out, err = capsys.readouterr()
        return code, out, err
    return go


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_saddle_grid_mean_curvature_vanishes(run):
    cfg = {"surface": SADDLE, "grid": {"lo": [-1] * 4, "hi": [1] * 4, "resolution": 7}}
    code, out, _ = run("curvature", cfg, "--workers", "1")
    assert code == 0
    R = rows(out)
    assert len(R) == 7 ** 4
    live = [r for r in R if r["charFlag"] == "0"]
    assert len(live) < len(R)            # the grid meets the characteristic line
    assert max(abs(float(r["H"])) for r in live) < 1e-8
    assert max(float(r["tilde_h_sq"]) for r in live) > 1e-3
    assert all(r["H"] == "" for r in R if r["charFlag"] == "1")


def test_hyperplane_grid_is_htg(run):
    cfg = {"surface": {"kind": "hyperplane", "n": 2, "a": [1, -2], "b": [0.5, 0], "c": 1, "d": 3},
           "grid": {"lo": [-2] * 4, "hi": [2] * 4, "resolution": 5}, "format": "json"}
    code, out, _ = run("curvature", cfg)
    doc = json.loads(out)
    assert code == 0 and doc["rows"] == 625
    assert max(v for v in doc["tilde_h_sq"] if v is not None) < 1e-8
    P = np.array(doc["points"])
    np.testing.assert_allclose(P[:, 0] - 2 * P[:, 1] + 0.5 * P[:, 2] + P[:, 4] + 3, 0, atol=1e-12)


def test_implicit_newton_on_other_axis(run):
    # x1 = t^3 + y1 solved along axis 0
    poly = [{"coeff": 1, "exps": [1, 0, 0]}, {"coeff": -1, "exps": [0, 0, 3]}, {"coeff": -1, "exps": [0, 1, 0]}]
    cfg = {"surface": {"kind": "implicit", "n": 1, "poly": poly},
           "grid": {"lo": [-1, -1], "hi": [1, 1], "resolution": 3, "solve_axis": 0}, "frobenius": True,
           "format": "json"}
    code, out, _ = run("curvature", cfg)
    assert code == 0
    P = np.array(json.loads(out)["points"])
    np.testing.assert_allclose(P[:, 0], P[:, 2] ** 3 + P[:, 1], atol=1e-12)


def test_implicit_without_solution_fails(run):
    poly = [{"coeff": 1, "exps": [0, 0, 2]}, {"coeff": 1, "exps": [0, 0, 0]}]   # t^2 + 1
    cfg = {"surface": {"kind": "implicit", "n": 1, "poly": poly},
           "grid": {"lo": [0, 0], "hi": [1, 1], "resolution": 2}}
    code, _, err = run("curvature", cfg)
    assert code == 1 and "could not solve" in err


def test_output_is_byte_identical(run, tmp_path):
    cfg = {"surface": SADDLE, "grid": {"lo": [-1] * 4, "hi": [1] * 4, "resolution": 9}}
    outs = []
    for workers in ("1", "2", "2"):
        path = tmp_path / f"out{len(outs)}.csv"
        assert run("curvature", cfg, "--workers", workers, "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    rcfg = {"surface": SADDLE, "param": [0.5, 0.3, -0.2, 0.4], "n_dirs": 3, "horizon": 1.0}
    a = run("ruling", rcfg, "--workers", "1")[1]
    b = run("ruling", rcfg, "--workers", "3")[1]
    assert a == b


def test_geodesic_flat_chart_is_straight(run):
    cfg = {"surface": {"kind": "intrinsic-y1", "n": 2, "poly": [], "box": BOX4},
           "start": [0.1, 0.2, -0.1, 0.3], "tangent_coeffs": [1, 2, -1]}
    code, out, _ = run("geodesic", cfg, "--step", "0.01", "--horizon", "1")
    assert code == 0
    R = rows(out)
    assert len(R) == 101
    X = np.array([[float(r[k]) for k in ("x1", "x2", "y1", "y2", "t")] for r in R])
    s = np.array([float(r["s"]) for r in R])
    v = (X[1] - X[0]) / s[1]
    # horizontal line through X[0]: z linear, t = t0 + s Q(z0, v)
    np.testing.assert_allclose(X[:, :4], X[0, :4] + s[:, None] * v[:4], atol=1e-12)
    q = X[0, 2:4] @ v[:2] - X[0, :2] @ v[2:4]
    np.testing.assert_allclose(X[:, 4], X[0, 4] + s * q, atol=1e-12)
    assert max(float(r["horizontality_residual"]) for r in R) < 1e-12


def test_geodesic_step_halving_pair(run):
    cfg = {"surface": {"kind": "intrinsic-y1", "n": 2, "poly": GEO_PHI, "box": BOX4},
           "start": [0.1, 0.2, -0.1, 0.05], "tangent_coeffs": [0.3, 1.0, 0.2], "format": "json"}
    ends = []
    for h in (0.1, 0.05, 0.025):
        doc = json.loads(run("geodesic", cfg, "--step", str(h), "--horizon", "1")[1])
        assert doc["last_s"] == pytest.approx(1.0)
        ends.append(np.array(doc["rows"][-1][1:5]))
    ratio = np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2])
    assert 12 <= ratio <= 20


def test_geodesic_domain_exit_reported(run):
    box = {"lo": [-0.2, -5, -5, -5], "hi": [0.2, 5, 5, 5]}
    cfg = {"surface": {"kind": "intrinsic-y1", "n": 2, "poly": GEO_PHI, "box": box},
           "start": [0.0, 0.2, -0.1, 0.05], "tangent_coeffs": [1.0, 1.0, 1.0]}
    code, out, err = run("geodesic", cfg, "--step", "0.01", "--horizon", "1")
    assert code == 0
    assert "last valid s" in err
    R = rows(out)
    last = float(R[-1]["s"])
    assert 0 < last < 1
    assert all(abs(float(r["xi1"])) <= 0.2 for r in R)
    assert abs(float(R[-1]["xi1"])) > 0.2 - 0.02     # within a step or two of the wall
    assert f"{last!r}" in err


def test_geodesic_rejects_non_chart(run):
    code, _, err = run("geodesic", {"surface": SADDLE, "point": [0, 0, 0, 0, 0], "direction": [1, 0, 0, 0]})
    assert code == 2 and "surface.kind" in err and "saddle-y1" in err


def test_geodesic_on_saddle_chart(run):
    cfg = {"surface": {"kind": "saddle-y1", "n": 2, "box": {"lo": [1.2, -3, -3, -4], "hi": [4, 3, 3, 1.4]}},
           "start": [2.0, 0.2, -0.3, -0.5], "tangent_coeffs": [0.5, 0.6, -0.4], "format": "json"}
    code, out, _ = run("geodesic", cfg, "--step", "0.01", "--horizon", "0.5")
    doc = json.loads(out)
    assert code == 0 and not doc["exited"]
    i = doc["columns"].index("surface_residual")
    assert max(r[i] for r in doc["rows"]) < 1e-10


def test_ruling_reports(run):
    code, out, _ = run("ruling", {"surface": {"kind": "helicoid"}, "params": [[0.5, 0.7], [-1, 2]]})
    doc = json.loads(out)
    assert code == 0 and doc["all_ruled"]
    assert all(r["max_residual_before_exit"] < 1e-10 for p in doc["points"] for r in p["rays"])

    code, out, _ = run("ruling", {"surface": {"kind": "vertical-hyperplane", "n": 2, "a": [1, 0], "b": [0, 1],
                                              "c": 0.5}, "point": [0.5, 3, 0, 0, 2]})
    doc = json.loads(out)
    assert doc["all_ruled"]
    assert max(r["max_residual_before_exit"] for r in doc["points"][0]["rays"]) < 1e-12

    code, out, _ = run("ruling", {"surface": SADDLE, "param": [0.5, 0.3, -0.2, 0.4]})
    doc = json.loads(out)
    assert not doc["all_ruled"]
    exits = [r for r in doc["points"][0]["rays"] if not r["stays_within_horizon"]]
    assert any(r["endpoint_characteristic"] is False and r["exit_NH"] > 0.1 for r in exits)


def test_ruling_csv_and_explicit_directions(run):
    cfg = {"surface": {"kind": "horizontal-plane"}}
    assert run("ruling", cfg)[0] == 2
    cfg = {"surface": {"kind": "t-graph", "n": 1, "poly": []}, "point": [1, 0, 0],
           "directions": [[2, 0]], "format": "csv"}
    code, out, _ = run("ruling", cfg, "--horizon", "3", "--step", "0.01")
    R = rows(out)
    assert code == 0 and len(R) == 1 and R[0]["stays_within_horizon"] == "1"
    assert float(R[0]["w0"]) == 1.0


def test_ruling_bad_direction_is_computation_failure(run):
    cfg = {"surface": {"kind": "t-graph", "n": 1, "poly": []}, "point": [1, 0, 0], "directions": [[0, 1]]}
    code, _, err = run("ruling", cfg)
    assert code == 1 and "tangent" in err


@pytest.mark.parametrize("cfg, key", [
    ({"surface": SADDLE, "points": [[0, 0, 0, 0, 0]], "colour": 1}, "colour"),
    ({"surface": {**SADDLE, "shape": 2}, "points": [[0, 0, 0, 0, 0]]}, "surface.shape"),
    ({"surface": SADDLE, "grid": {"lo": [0] * 4, "hi": [1] * 4, "resolution": 2, "step": 1}}, "grid.step"),
    ({"surface": SADDLE, "grid": {"lo": [0] * 4, "hi": [1] * 4, "resolution": 0}}, "grid.resolution"),
    ({"surface": SADDLE, "grid": {"lo": [0, 0, 2, 0], "hi": [1] * 4, "resolution": 2}}, "grid"),
    ({"surface": SADDLE, "grid": {"lo": [0] * 3, "hi": [1] * 4, "resolution": 2}}, "grid.lo"),
    ({"surface": {"kind": "t-graph", "n": 1, "poly": [{"coeff": 1, "exps": [1]}]}, "points": [[0, 0, 0]]},
     "surface.poly[0].exps"),
    ({"surface": {"kind": "t-graph", "n": 1, "poly": [{"coeff": 1, "exps": [1, 0], "x": 0}]},
      "points": [[0, 0, 0]]}, "surface.poly[0].x"),
    ({"surface": {"kind": "cube"}, "points": [[0, 0, 0]]}, "surface.kind"),
    ({"surface": SADDLE, "points": [[0, 0, 0, 0, 0]], "tol_char": -1}, "tol_char"),
    ({"surface": SADDLE, "points": [[0, 0, 0, 0, 0]], "format": "xml"}, "format"),
    ({"command": "ruling", "surface": SADDLE, "points": [[0, 0, 0, 0, 0]]}, "command"),
])
def test_config_errors_name_the_key(run, cfg, key):
    code, out, err = run("curvature", cfg)
    assert code == 2 and out == ""
    assert f"'{key}'" in err


def test_intrinsic_grid_must_fit_box():
    spec = {"surface": {"kind": "intrinsic-y1", "n": 1, "poly": [], "box": {"lo": [0, 0], "hi": [1, 1]}},
            "grid": {"lo": [0, 0], "hi": [2, 1], "resolution": 2}}
    with pytest.raises(cf.ConfigError) as exc:
        cf.parse_config(spec, "curvature")
    assert exc.value.key == "grid"


def test_missing_config_prints_usage(run, capsys):
    for cmd in ("curvature", "geodesic", "ruling"):
        with pytest.raises(SystemExit) as exc:
            cli.main([cmd])
        assert exc.value.code == 2
        assert "usage:" in capsys.readouterr().err
    code, _, err = run("curvature", None, "--config", "/nonexistent/cfg.json")
    assert code == 2 and "--config" in err


def test_invalid_json(run, tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert run("ruling", None, "--config", str(p))[0] == 2


def test_flags_override_config(run):
    cfg = {"surface": {"kind": "t-graph", "n": 1, "poly": []}, "point": [1, 0, 0], "n_dirs": 1,
           "horizon": 1.0}
    doc = json.loads(run("ruling", cfg, "--horizon", "2.5")[1])
    assert doc["horizon"] == 2.5
    assert all(r["horizon"] == 2.5 for r in doc["points"][0]["rays"])


def test_verify_single_criterion_and_mutation(run):
    code, out, _ = run("verify", None, "--only", "8")
    assert code == 0 and out.startswith("[PASS] criterion 8")
    code, out, _ = run("verify", None, "--only", "8", "--mutate", "group-law")
    assert code == 1 and out.startswith("[FAIL] criterion 8")
    code, out, _ = run("verify", None, "--only", "1", "--format", "json")
    assert json.loads(out)[0]["passed"] is True
