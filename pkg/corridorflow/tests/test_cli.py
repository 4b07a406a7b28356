"""
Tests for CLI functionality.
"""

import csv
import json
import os
import tempfile

import numpy as np
from click.testing import CliRunner

from ..api.scenario import load_scenario
from ..cli.main import cli
from ..core.kinematics import camera_to_arm_transform, workspace_cloud


def strip_scenario(**sim):
    settings = {"dt": 0.01, "max_steps": 2000, "goal_tol": 0.05}
    settings.update(sim)
    return {
        "name": "strip",
        "robot": {"type": "rod", "length": 1.0},
        "start": {"base": [1.0, 0.5], "angles": [0.0]},
        "corridor": {
            "sets": [{"type": "box", "min": [0.0, 0.0], "max": [6.0, 1.0]}],
            "goal": [5.0, 0.5, 0.0],
        },
        "safety": {"k_p": 2.0, "max_speed": 3.0, "joint_limit_cbf": False},
        "sim": settings,
    }


def write_json(directory, name, data):
    path = os.path.join(directory, name)
    with open(path, "w") as f:
        json.dump(data, f)
    return path


class TestCLI:
    def setup_method(self):
        self.runner = CliRunner()

    def test_version(self):
        """Test version option."""
        result = self.runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "version" in result.output.lower()

    def test_run_reaches_goal(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            scenario = write_json(tmpdir, "strip.json", strip_scenario())
            trace = os.path.join(tmpdir, "trace.csv")

            result = self.runner.invoke(cli, ["run", scenario, "--trace", trace])

            assert result.exit_code == 0
            assert "reached_goal" in result.output
            with open(trace, newline="") as f:
                rows = list(csv.reader(f))
            assert rows[0][0] == "t"
            assert len(rows) > 2

    def test_run_traces_are_byte_identical(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            scenario = write_json(tmpdir, "strip.json", strip_scenario())
            first = os.path.join(tmpdir, "a.csv")
            second = os.path.join(tmpdir, "b.csv")

            self.runner.invoke(cli, ["run", scenario, "--trace", first])
            self.runner.invoke(cli, ["run", scenario, "--trace", second])

            with open(first, "rb") as a, open(second, "rb") as b:
                assert a.read() == b.read()

    def test_run_default_output_dir(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            scenario = write_json(tmpdir, "strip.json", strip_scenario())
            out_dir = os.path.join(tmpdir, "out")

            result = self.runner.invoke(
                cli, ["run", scenario], env={"CORRIDORFLOW_OUTPUT_DIR": out_dir}
            )

            assert result.exit_code == 0
            assert os.path.exists(os.path.join(out_dir, "strip_trace.csv"))

    def test_run_timeout_exit_code(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            scenario = write_json(tmpdir, "strip.json", strip_scenario(max_steps=5))
            result = self.runner.invoke(
                cli, ["run", scenario, "--trace", os.path.join(tmpdir, "t.csv")]
            )
            assert result.exit_code == 3
            assert "timeout" in result.output

    def test_run_infeasible_exit_code(self):
        data = strip_scenario(dt=1.0, max_steps=10)
        data["safety"] = {"k_p": 10.0, "gamma": 50.0, "joint_limit_cbf": False}
        data["corridor"]["sets"][0]["max"] = [10.0, 1.0]
        data["corridor"]["goal"] = [9.0, 0.5, 0.0]
        data["robot"]["length"] = 0.5
        with tempfile.TemporaryDirectory() as tmpdir:
            scenario = write_json(tmpdir, "overshoot.json", data)
            result = self.runner.invoke(
                cli, ["run", scenario, "--trace", os.path.join(tmpdir, "t.csv")]
            )
            assert result.exit_code == 2

    def test_run_missing_scenario(self):
        result = self.runner.invoke(cli, ["run", "/nonexistent/scenario.json"])
        assert result.exit_code == 4
        assert "Error" in result.output

    def test_run_malformed_scenario(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "bad.json")
            with open(path, "w") as f:
                f.write('{\n  "robot": {"type": "rod",\n}\n')
            result = self.runner.invoke(cli, ["run", path])
            assert result.exit_code == 4
            assert "line" in result.output

    def test_check_bundled_maze(self):
        result = self.runner.invoke(cli, ["check", "maze_rod_l1"])
        assert result.exit_code == 0
        assert "valid" in result.output

    def test_check_disconnected_corridor(self):
        data = strip_scenario()
        data["corridor"]["sets"] = [
            {"type": "box", "min": [0.0, 0.0], "max": [2.0, 1.0]},
            {"type": "box", "min": [3.0, 0.0], "max": [6.0, 1.0]},
        ]
        with tempfile.TemporaryDirectory() as tmpdir:
            scenario = write_json(tmpdir, "gap.json", data)
            result = self.runner.invoke(cli, ["check", scenario])
            assert result.exit_code == 4
            assert "do not intersect" in result.output

    def test_bench(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            out = os.path.join(tmpdir, "bench.csv")
            result = self.runner.invoke(
                cli, ["bench", "bench", "--joints", "2,1", "--repeats", "1", "--out", out]
            )
            assert result.exit_code == 0
            with open(out, newline="") as f:
                rows = list(csv.reader(f))
            assert rows[0] == ["joints", "median_s", "p99_s", "constraints"]
            assert [r[0] for r in rows[1:]] == ["1", "2"]
            assert int(rows[1][3]) < int(rows[2][3])
            assert "Trend: median ratio" in result.output

    def test_bench_rejects_bad_joint_count(self):
        result = self.runner.invoke(cli, ["bench", "bench", "--joints", "5"])
        assert result.exit_code == 4

    def test_bench_rejects_rod(self):
        result = self.runner.invoke(cli, ["bench", "maze_rod_l1", "--repeats", "1"])
        assert result.exit_code == 4

    def test_workspace(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            out = os.path.join(tmpdir, "ws.csv")
            result = self.runner.invoke(
                cli, ["workspace", "arm4", "--resolution", "2", "--out", out]
            )
            assert result.exit_code == 0
            with open(out, newline="") as f:
                rows = list(csv.reader(f))
            assert rows[0] == ["x", "y", "z"]
            assert len(rows) == 17

    def test_locate_reachable_point(self):
        scenario = load_scenario("arm3")
        cloud = workspace_cloud(
            scenario.model, scenario.sim.workspace_resolution,
            frozen_angles=scenario.start.angles,
        )
        target = np.append(cloud.points[100], 1.0)
        camera = np.linalg.inv(camera_to_arm_transform(scenario.model.camera, 0.2)) @ target
        args = [repr(float(v)) for v in camera[:3]]

        result = self.runner.invoke(cli, ["locate", "arm3", "--alpha", "0.2", "--"] + args)

        assert result.exit_code == 0
        assert "arm frame:" in result.output

    def test_locate_unreachable_point(self):
        result = self.runner.invoke(cli, ["locate", "arm3", "--", "5.0", "5.0", "5.0"])
        assert result.exit_code == 1
        assert "not reachable" in result.output

    def test_locate_needs_camera(self):
        result = self.runner.invoke(cli, ["locate", "maze_rod_l1", "--", "0", "0", "0"])
        assert result.exit_code == 4
