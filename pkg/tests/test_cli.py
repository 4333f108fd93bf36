"""End-to-end runs of the gridcoher command line."""

import csv
import json
import math
import subprocess
import sys

import numpy as np

from gridcoher import (
    Dapi,
    Droop,
    GeneratorParams,
    assemble,
    make_graph,
    sync_norm_monte_carlo,
)


def run_cli(args, env=None):
    cmd = [sys.executable, "-m", "gridcoher", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


def write_cfg(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_json(path):
    return json.loads(path.read_text())


BASE_TWO_BUS = {
    "graph": {"family": "path", "n": 2},
    "params": {"m": 1.0, "d": 1.0},
}


class TestNorm:
    def test_all_methods_two_bus(self, tmp_path):
        cfg = dict(BASE_TWO_BUS)
        cfg["controller"] = {"variant": "droop"}
        cfg["mc"] = {"samples": 800, "seed": 1}
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["norm", "--config", path, "--out", str(out), "--method", "all"])
        assert res.returncode == 0, res.stderr
        for name in ("closed_form", "lyapunov", "monte_carlo"):
            assert (out / f"norm_{name}.json").exists()
        closed = read_json(out / "norm_closed_form.json")
        assert closed["value"] == 0.125
        comparison = read_json(out / "comparison.json")
        assert comparison["relative_differences"]["closed_form_vs_lyapunov"] <= 1e-10
        mc = comparison["values"]["monte_carlo"]
        se = comparison["monte_carlo_stderr"]
        assert abs(mc - 0.125) <= 3.0 * se

    def test_dapi_gamma_zero_file_matches_depi(self, tmp_path):
        outs = []
        for name, ctrl in (
            ("a", {"variant": "dapi", "q": 1.0, "gamma": 0.0}),
            ("b", {"variant": "depi", "q": 1.0}),
        ):
            cfg = dict(BASE_TWO_BUS)
            cfg["controller"] = ctrl
            path = write_cfg(tmp_path, f"{name}.json", cfg)
            out = tmp_path / name
            res = run_cli(
                ["norm", "--config", path, "--out", str(out), "--method", "closed_form"]
            )
            assert res.returncode == 0, res.stderr
            outs.append((out / "norm_closed_form.json").read_bytes())
        assert outs[0] == outs[1]
        assert read_json(tmp_path / "a" / "norm_closed_form.json")["value"] == 1.0 / 12.0

    def test_capi_value_equals_droop(self, tmp_path):
        vals = []
        for name, ctrl in (("d", {"variant": "droop"}), ("c", {"variant": "capi", "q": 0.4})):
            cfg = {
                "graph": {"family": "ring", "n": 7},
                "params": {"m": 1.3, "d": 0.8},
                "controller": ctrl,
            }
            path = write_cfg(tmp_path, f"{name}.json", cfg)
            out = tmp_path / name
            res = run_cli(
                ["norm", "--config", path, "--out", str(out), "--method", "closed_form"]
            )
            assert res.returncode == 0, res.stderr
            vals.append(read_json(out / "norm_closed_form.json")["value"])
        assert vals[0] == vals[1]

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = dict(BASE_TWO_BUS)
        cfg["controller"] = {"variant": "dapi", "q": 1.0, "gamma": 0.5}
        cfg["mc"] = {"samples": 300, "seed": 2}
        path = write_cfg(tmp_path, "cfg.json", cfg)
        blobs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            res = run_cli(
                ["norm", "--config", path, "--out", str(out), "--method", "monte_carlo"]
            )
            assert res.returncode == 0, res.stderr
            blobs.append((out / "norm_monte_carlo.json").read_bytes())
        assert blobs[0] == blobs[1]


class TestSweep:
    def test_path_growth_and_bound(self, tmp_path):
        cfg = {
            "sweep": {"family": "path", "n_list": [8, 16, 32]},
            "params": {"m": 1.0, "d": 1.0},
            "controllers": [
                {"variant": "droop"},
                {"variant": "dapi", "q": 1.0, "gamma": 0.3},
            ],
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["sweep", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["family", "n", "controller", "gamma", "q", "norm", "bound", "errors"]
        droop = [float(r["norm"]) for r in rows if r["controller"] == "droop"]
        assert droop == sorted(droop) and droop[0] < droop[-1]
        dapi = [r for r in rows if r["controller"] == "dapi"]
        for r in dapi:
            bound = float(r["bound"])
            assert bound == 0.65  # (0.3 * 1 + 1) / 2
            assert float(r["norm"]) < bound
            assert r["errors"] == ""

    def test_complete_graph_closed_value(self, tmp_path):
        b, d, n = 2.0, 0.5, 6
        cfg = {
            "sweep": {"family": "complete", "n_list": [n], "weight": b},
            "params": {"m": 1.0, "d": d},
            "controllers": [{"variant": "droop"}],
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["sweep", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        with open(out / "sweep.csv", newline="") as fh:
            row = next(csv.DictReader(fh))
        expect = (n - 1) / (2.0 * n * (b * n) * d)
        assert abs(float(row["norm"]) - expect) <= 1e-14

    def test_row_error_is_recorded_not_fatal(self, tmp_path):
        cfg = {
            "sweep": {"family": "path", "n_list": [4]},
            "params": {"m": [1.0, 2.0, 1.0, 1.0], "d": 1.0},
            "controllers": [{"variant": "droop"}],
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["sweep", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        with open(out / "sweep.csv", newline="") as fh:
            row = next(csv.DictReader(fh))
        assert row["norm"] == ""
        assert "AssumptionError" in row["errors"]


class TestSimulate:
    def test_zero_load_vector(self, tmp_path):
        cfg = {
            "graph": {"family": "ring", "n": 4},
            "params": {"m": 1.0, "d": 1.0},
            "controller": {"variant": "droop"},
            "load": {"vector": [0.0, 0.0, 0.0, 0.0]},
            "sim": {"horizon": 2.0, "dt": 0.01},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["simulate", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        summary = read_json(out / "summary.json")
        assert summary["runs"][0]["integrated_y_sq"] == 0.0
        assert summary["load"] == [0.0, 0.0, 0.0, 0.0]
        with open(out / "trajectory_droop.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert all(float(r["y_sq"]) == 0.0 for r in rows)

    def test_summary_integral_matches_trajectory(self, tmp_path):
        cfg = {
            "graph": {"family": "ring", "n": 5},
            "params": {"m": 1.0, "d": 1.0},
            "controllers": [{"variant": "droop"}, {"variant": "dapi", "q": 1.0, "gamma": 0.5}],
            "load": {"seed": 3},
            "sim": {"horizon": 20.0, "dt": 0.01},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["simulate", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        summary = read_json(out / "summary.json")
        assert [r["controller"] for r in summary["runs"]] == ["droop", "dapi_gamma0.5"]
        for run in summary["runs"]:
            with open(out / f"trajectory_{run['controller']}.csv", newline="") as fh:
                rows = list(csv.DictReader(fh))
            t = np.array([float(r["t"]) for r in rows])
            y = np.array([float(r["y_sq"]) for r in rows])
            integral = float(np.trapezoid(y, t))
            assert abs(integral - run["integrated_y_sq"]) <= 1e-9 * max(integral, 1e-12)
        # integral control strictly improves the transient here
        assert summary["runs"][1]["integrated_y_sq"] < summary["runs"][0]["integrated_y_sq"]

    def test_nonlinear_model_runs(self, tmp_path):
        cfg = {
            "graph": {"family": "path", "n": 2},
            "params": {"m": 1.0, "d": 1.0},
            "controller": {"variant": "droop"},
            "load": {"vector": [0.3, -0.3]},
            "sim": {"horizon": 5.0, "dt": 0.01, "model": "nonlinear"},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["simulate", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        summary = read_json(out / "summary.json")
        assert summary["model"] == "nonlinear"
        assert summary["runs"][0]["warnings"] == []
        assert summary["runs"][0]["integrated_y_sq"] > 0.0


class TestTune:
    def test_complete_graph_quarter(self, tmp_path):
        cfg = {
            "graph": {"family": "complete", "n": 4},
            "params": {"m": 1.0, "d": 1.0},
            "tune": {"q": 1.0},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["tune", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        data = read_json(out / "tune.json")
        assert data["gamma_star"] == 0.25
        assert data["regime"] == "all_underdamped"
        gammas = [c["gamma"] for c in data["context"]]
        assert gammas == [0.0, 0.25, 3.5]
        norms = [c["norm"] for c in data["context"]]
        assert norms[1] == min(norms)
        assert abs(data["achieved_norm"] - norms[1]) <= 1e-15

    def test_complete_graph_overdamped(self, tmp_path):
        cfg = {
            "graph": {"family": "complete", "n": 4},
            "params": {"m": 1.0, "d": 3.0},
            "tune": {"q": 1.0},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["tune", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        data = read_json(out / "tune.json")
        assert data["gamma_star"] == 0.0
        assert data["regime"] == "all_overdamped"

    def test_path3_bracket(self, tmp_path):
        cfg = {
            "graph": {"family": "path", "n": 3},
            "params": {"m": 1.0, "d": 0.5},
            "tune": {"q": 1.0},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["tune", "--config", path, "--out", str(out)])
        assert res.returncode == 0, res.stderr
        data = read_json(out / "tune.json")
        lo, hi = data["bracket"]
        assert abs(lo - (math.sqrt(3.0) - 0.5) / 3.0) <= 1e-12
        assert abs(hi - 0.5) <= 1e-12
        assert lo <= data["gamma_star"] <= hi


class TestFailureModes:
    def test_bad_config_writes_error_json(self, tmp_path):
        cfg = {"graph": {"family": "path", "n": 2}}  # params missing
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["norm", "--config", path, "--out", str(out)])
        assert res.returncode == 1
        payload = json.loads(res.stderr.strip().splitlines()[-1])
        assert payload["error"] == "ConfigError"
        on_disk = read_json(out / "error.json")
        assert on_disk == payload

    def test_missing_config_file(self, tmp_path):
        out = tmp_path / "out"
        res = run_cli(["norm", "--config", str(tmp_path / "nope.json"), "--out", str(out)])
        assert res.returncode == 1
        assert "not found" in res.stderr

    def test_disconnected_edge_list(self, tmp_path):
        edges = tmp_path / "edges.csv"
        edges.write_text("i,j,k\n0,1,1.0\n2,3,1.0\n")
        cfg = {
            "graph": {"edge_list": str(edges)},
            "params": {"m": 1.0, "d": 1.0},
            "controller": {"variant": "droop"},
        }
        path = write_cfg(tmp_path, "cfg.json", cfg)
        out = tmp_path / "out"
        res = run_cli(["norm", "--config", path, "--out", str(out)])
        assert res.returncode == 1
        payload = read_json(out / "error.json")
        assert payload["error"] == "DisconnectedGraphError"


class TestControllerOrdering:
    def test_ring_ensemble_ranking(self):
        g = make_graph("ring", 10)
        params = GeneratorParams.uniform(10, 1.0, 1.0)
        reports = {
            name: sync_norm_monte_carlo(assemble(g, params, ctrl), 500, master_seed=11)
            for name, ctrl in (
                ("dapi_small", Dapi(q=1.0, gamma=0.01)),
                ("dapi_one", Dapi(q=1.0, gamma=1.0)),
                ("droop", Droop()),
            )
        }
        assert reports["dapi_small"].value < reports["dapi_one"].value
        assert reports["dapi_one"].value < reports["droop"].value
