import json
import subprocess
import sys
from pathlib import Path

from plumetrack.cli import main
from plumetrack.simulator import expected_records

SHORT_SCENARIO = {
    "schema": 1,
    "name": "short",
    "seed": 7,
    "duration": 3.0,
    "control_period": 0.05,
    "field": {
        "type": "frozen-gaussian", "peak": 60.0, "sigma": 18.0,
        "center": [0.0, 0.0],
        "flow": {"type": "uniform", "velocity": [0.1, 0.0]}},
    "vessel": {"start_pose": [10.8695, 0.5, -1.5707963267948966]},
    "gains": {"c0": 50.0, "k": 1.2, "k1": 5.0, "k2": 11.0, "v_d": 1.5},
}

GRID_ESCAPE = {
    "schema": 1, "name": "grid-escape", "seed": 0, "duration": 30.0,
    "field": {
        "type": "grid", "origin": [-8.0, -8.0], "cell_size": 0.5,
        "shape": [32, 32], "diffusion": 0.05, "boundary": "outflow",
        "flow": {"type": "uniform", "velocity": [0.5, 0.0]},
        "init_puff": {"release_time": -40.0, "point": [-20.0, 0.0],
                      "strength": 1200.0}},
    "vessel": {"start_pose": [2.0, 0.0, -1.5707963267948966]},
    "gains": {"c0": 30.0, "k": 0.05, "k1": 5.0, "k2": 11.0, "v_d": 1.0},
}


def write_scenario(tmp_path: Path, doc: dict, name="sc.json") -> Path:
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def cli(*args) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "plumetrack.cli", *args],
                          capture_output=True, text=True)


class TestRunCommand:
    def test_run_writes_outputs(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        out = tmp_path / "out"
        proc = cli("run", str(sc), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        rows = (out / "log.csv").read_text().splitlines()
        assert len(rows) == expected_records(3.0, 0.05) + 1  # header + data
        m = json.loads((out / "metrics.json").read_text())
        assert m["seed"] == 7
        assert not list(out.glob("*.tmp"))

    def test_seed_override_echoed(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        out = tmp_path / "out"
        proc = cli("run", str(sc), "--out", str(out), "--seed", "42")
        assert proc.returncode == 0
        assert json.loads((out / "metrics.json").read_text())["seed"] == 42

    def test_missing_gains_field_names_it(self, tmp_path):
        doc = {k: v for k, v in SHORT_SCENARIO.items() if k != "gains"}
        sc = write_scenario(tmp_path, doc)
        proc = cli("run", str(sc), "--out", str(tmp_path / "o"))
        assert proc.returncode == 2
        assert "gains" in proc.stderr

    def test_unknown_field_rejected(self, tmp_path):
        doc = dict(SHORT_SCENARIO, gians=1)
        sc = write_scenario(tmp_path, doc)
        proc = cli("run", str(sc), "--out", str(tmp_path / "o"))
        assert proc.returncode == 2
        assert "gians" in proc.stderr

    def test_typo_in_gain_name_rejected(self, tmp_path):
        doc = json.loads(json.dumps(SHORT_SCENARIO))
        doc["gains"]["k3"] = 1.0
        sc = write_scenario(tmp_path, doc)
        proc = cli("run", str(sc), "--out", str(tmp_path / "o"))
        assert proc.returncode == 2
        assert "k3" in proc.stderr

    def test_json_syntax_error_line_anchored(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{\n  "schema": 1,\n  "oops"\n}\n')
        proc = cli("run", str(p), "--out", str(tmp_path / "o"))
        assert proc.returncode == 2
        import re
        assert re.search(r"broken\.json:\d+:\d+:", proc.stderr)

    def test_missing_file(self, tmp_path):
        proc = cli("run", str(tmp_path / "nope.json"), "--out",
                   str(tmp_path / "o"))
        assert proc.returncode == 2

    def test_truncated_run_exits_3(self, tmp_path):
        sc = write_scenario(tmp_path, GRID_ESCAPE)
        out = tmp_path / "out"
        proc = cli("run", str(sc), "--out", str(out))
        assert proc.returncode == 3
        m = json.loads((out / "metrics.json").read_text())
        assert m["truncated"] is True

    def test_degenerate_stencil_exits_4(self, tmp_path):
        doc = json.loads(json.dumps(SHORT_SCENARIO))
        doc["rig"] = {"offsets": [[1.0, 0.0], [-1.0, 0.0],
                                  [0.0, 1e-7], [0.0, -1e-7]]}
        sc = write_scenario(tmp_path, doc)
        proc = cli("run", str(sc), "--out", str(tmp_path / "o"))
        assert proc.returncode == 4
        assert "stencil" in proc.stderr.lower()

    def test_determinism_bytes(self, tmp_path):
        sc = write_scenario(tmp_path, dict(SHORT_SCENARIO, noise={"sigma": 2.0}))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli("run", str(sc), "--out", str(out1)).returncode == 0
        assert cli("run", str(sc), "--out", str(out2)).returncode == 0
        assert (out1 / "log.csv").read_bytes() == (out2 / "log.csv").read_bytes()
        assert (out1 / "metrics.json").read_bytes() == \
            (out2 / "metrics.json").read_bytes()


class TestSweepCommand:
    def test_product_and_order(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        out = tmp_path / "sweep"
        proc = cli("sweep", str(sc), "--set", "gains.k1=2,5,10",
                   "--set", "gains.k2=5,11", "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        rows = (out / "sweep_summary.csv").read_text().splitlines()
        assert len(rows) == 7
        header = rows[0].split(",")
        assert header[:3] == ["run", "gains.k1", "gains.k2"]
        combos = [tuple(r.split(",")[1:3]) for r in rows[1:]]
        assert combos == [("2", "5"), ("2", "11"), ("5", "5"), ("5", "11"),
                          ("10", "5"), ("10", "11")]
        for i in range(6):
            assert (out / f"run{i:03d}" / "log.csv").exists()

    def test_parallelism_invariance(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        a = cli("sweep", str(sc), "--set", "gains.k1=2,5", "--out", str(out1),
                "--jobs", "1")
        b = cli("sweep", str(sc), "--set", "gains.k1=2,5", "--out", str(out2),
                "--jobs", "4")
        assert a.returncode == 0 and b.returncode == 0
        assert (out1 / "sweep_summary.csv").read_bytes() == \
            (out2 / "sweep_summary.csv").read_bytes()

    def test_unknown_path_rejected(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        proc = cli("sweep", str(sc), "--set", "gains.bogus=1,2",
                   "--out", str(tmp_path / "s"))
        assert proc.returncode == 2
        assert "bogus" in proc.stderr

    def test_string_valued_sweep(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        out = tmp_path / "s"
        proc = cli("sweep", str(sc), "--set",
                   "sign_convention=pde-derived,advection-opposed",
                   "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        rows = (out / "sweep_summary.csv").read_text().splitlines()
        assert len(rows) == 3

    def test_truncated_member_propagates_exit_3(self, tmp_path):
        sc = write_scenario(tmp_path, GRID_ESCAPE)
        out = tmp_path / "s"
        proc = cli("sweep", str(sc), "--set", "gains.v_d=1.0,1.2",
                   "--out", str(out))
        assert proc.returncode == 3
        rows = (out / "sweep_summary.csv").read_text().splitlines()
        assert all(r.endswith(",3") for r in rows[1:])

    def test_aborted_member_propagates_exit_4(self, tmp_path):
        doc = json.loads(json.dumps(SHORT_SCENARIO))
        doc["rig"] = {"offsets": [[1.0, 0.0], [-1.0, 0.0],
                                  [0.0, 1e-7], [0.0, -1e-7]]}
        sc = write_scenario(tmp_path, doc)
        out = tmp_path / "s"
        proc = cli("sweep", str(sc), "--set", "gains.k1=5,6",
                   "--out", str(out))
        assert proc.returncode == 4
        rows = (out / "sweep_summary.csv").read_text().splitlines()
        # aborted runs leave empty metric cells but keep their exit code
        assert all(r.endswith(",4") for r in rows[1:])


class TestPlotCommand:
    def make_log(self, tmp_path) -> Path:
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        out = tmp_path / "out"
        assert cli("run", str(sc), "--out", str(out)).returncode == 0
        return out / "log.csv"

    def test_timeseries_has_six_polylines(self, tmp_path):
        logp = self.make_log(tmp_path)
        svg = tmp_path / "ts.svg"
        proc = cli("plot", "--kind", "concentration-timeseries",
                   "--log", str(logp), "--out", str(svg), "--c0", "50")
        assert proc.returncode == 0, proc.stderr
        assert svg.read_text().count("<polyline") == 6

    def test_trajectory_plot(self, tmp_path, scenarios_dir):
        logp = self.make_log(tmp_path)
        svg = tmp_path / "traj.svg"
        proc = cli("plot", "--kind", "trajectory-xy", "--log", str(logp),
                   "--out", str(svg))
        assert proc.returncode == 0, proc.stderr
        text = svg.read_text()
        assert text.count("<polyline") == 2     # head point + estimate
        assert "<circle" in text and "<rect" in text

    def test_trajectory_plot_with_source_path(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        logp = self.make_log(tmp_path)
        svg = tmp_path / "traj.svg"
        proc = cli("plot", "--kind", "trajectory-xy", "--log", str(logp),
                   "--out", str(svg), "--scenario", str(sc))
        assert proc.returncode == 0, proc.stderr
        assert svg.read_text().count("<polyline") == 3

    def test_empty_log_rejected(self, tmp_path):
        from plumetrack.simulator import CSV_COLUMNS
        p = tmp_path / "empty.csv"
        p.write_text(",".join(CSV_COLUMNS) + "\n")
        proc = cli("plot", "--kind", "concentration-timeseries",
                   "--log", str(p), "--out", str(tmp_path / "x.svg"),
                   "--c0", "50")
        assert proc.returncode == 2

    def test_malformed_log_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("nonsense\n1,2,3\n")
        proc = cli("plot", "--kind", "trajectory-xy", "--log", str(p),
                   "--out", str(tmp_path / "x.svg"))
        assert proc.returncode == 2

    def test_svg_deterministic(self, tmp_path):
        logp = self.make_log(tmp_path)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        cli("plot", "--kind", "concentration-timeseries", "--log", str(logp),
            "--out", str(a), "--c0", "50")
        cli("plot", "--kind", "concentration-timeseries", "--log", str(logp),
            "--out", str(b), "--c0", "50")
        assert a.read_bytes() == b.read_bytes()


class TestValidateCommand:
    def test_validate_passes_in_process(self, capsys):
        assert main(["validate"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines and all(line.startswith("PASS") for line in lines)

    def test_misprinted_inverse_fails_identity(self):
        from plumetrack.validate import check_transform_identity
        ok, _ = check_transform_identity(n=200, use_misprinted_inverse=True)
        assert not ok


class TestMainInProcess:
    def test_scenario_error_exit_code(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{}")
        assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 2


class TestLoggingContract:
    def test_diagnostics_on_stderr_only(self, tmp_path):
        import os
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        env = dict(os.environ, PLUME_LOG="info")
        proc = subprocess.run(
            [sys.executable, "-m", "plumetrack.cli", "run", str(sc),
             "--out", str(tmp_path / "o")],
            capture_output=True, text=True, env=env)
        assert proc.returncode == 0
        assert proc.stdout == ""               # data goes to files only
        assert "running scenario" in proc.stderr

    def test_quiet_without_env(self, tmp_path):
        sc = write_scenario(tmp_path, SHORT_SCENARIO)
        proc = cli("run", str(sc), "--out", str(tmp_path / "o"))
        assert proc.returncode == 0
        assert proc.stdout == ""
        assert proc.stderr == ""
