from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from paraplan.cli import main

from conftest import scenario_doc

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario_doc()), encoding="utf-8")
    return path


def _kv(output: str) -> dict:
    values = {}
    for line in output.splitlines():
        if "=" in line and " " not in line.split("=", 1)[0]:
            key, value = line.split("=", 1)
            values[key] = value
    return values


class TestSimulate:
    def test_five_epochs_write_dumps_and_metrics(self, runner, scenario_file, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["simulate", str(scenario_file), "--epochs", "5", "--seed", "11",
             "--iterations", "20", "--rollout-depth", "4", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        dumps = sorted(out.glob("epoch_*.tree.json"))
        values = _kv(result.output)
        assigned = [k for k, v in values.items() if k.endswith("_status") and v == "assigned"]
        assert len(dumps) == len(assigned) > 0
        assert (out / "metrics.csv").exists()
        assert "service_rate" in values

    def test_same_seed_identical_outputs(self, runner, scenario_file, tmp_path):
        outputs = []
        for name in ("run_a", "run_b"):
            out = tmp_path / name
            result = runner.invoke(
                main,
                ["simulate", str(scenario_file), "--epochs", "3", "--seed", "5",
                 "--iterations", "15", "--rollout-depth", "3", "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
            blob = {p.name: p.read_bytes() for p in sorted(out.glob("*"))}
            outputs.append((result.output.replace(str(out), "<out>"), blob))
        assert outputs[0][0] == outputs[1][0]
        assert outputs[0][1].keys() == outputs[1][1].keys()
        for name in outputs[0][1]:
            assert outputs[0][1][name] == outputs[1][1][name], name

    def test_infeasible_epoch_logged_and_skipped(self, runner, tmp_path):
        doc = scenario_doc(vehicles=[{"id": 1, "capacity": 0, "location": 1}])
        path = tmp_path / "tight.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["simulate", str(path), "--epochs", "2", "--iterations", "5", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert "epoch_0_status=infeasible" in result.output

    def test_bad_scenario_exits_nonzero(self, runner, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"locations": []}', encoding="utf-8")
        result = runner.invoke(main, ["simulate", str(path), "--out", str(tmp_path / "o")])
        assert result.exit_code == 1
        assert "error=" in result.output

    def test_plot_writes_figures(self, runner, scenario_file, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["simulate", str(scenario_file), "--epochs", "2", "--iterations", "10",
             "--rollout-depth", "3", "--out", str(out), "--plot"],
        )
        assert result.exit_code == 0, result.output
        assert list(out.glob("epoch_*.map.png"))
        assert (out / "metrics.png").exists()


class TestCheck:
    def test_running_example_dump(self, runner):
        result = runner.invoke(
            main,
            ["check", str(GOLDEN / "running_example.tree.json"),
             "--formula", "AG (t_est <= t_d + t_a)"],
        )
        assert result.exit_code == 0, result.output
        values = _kv(result.output)
        assert values["verdict"] == "violated"
        assert values["pct"] == "10"
        assert values["avg"] == "23"
        assert values["min"] == "19"
        assert values["max"] == "27"
        assert values["scenarios"] == "150"

    def test_violation_free_formula(self, runner):
        result = runner.invoke(
            main,
            ["check", str(GOLDEN / "running_example.tree.json"),
             "--formula", "AG (t_d <= t_d + t_a)"],
        )
        values = _kv(result.output)
        assert values["verdict"] == "satisfied"
        assert values["pct"] == "0"

    def test_malformed_formula_exits_nonzero(self, runner):
        result = runner.invoke(
            main,
            ["check", str(GOLDEN / "running_example.tree.json"), "--formula", "AG t_est"],
        )
        assert result.exit_code == 1
        assert "error=" in result.output


class TestExplain:
    def test_factual_query_text(self, runner, scenario_file):
        query = json.dumps(
            {"qtype": "factual", "bindings": {"passenger": 1, "action": "dropoff", "direction": "late"}}
        )
        result = runner.invoke(
            main,
            ["explain", str(scenario_file), "--query", query, "--iterations", "40"],
        )
        assert result.exit_code == 0, result.output
        assert "desired drop-off time of 5:33 PM" in result.output
        assert "qtype=factual" in result.output

    def test_factual_query_matches_golden(self, runner, scenario_file):
        query = json.dumps(
            {"qtype": "factual", "bindings": {"passenger": 1, "action": "dropoff", "direction": "late"}}
        )
        result = runner.invoke(
            main,
            ["explain", str(scenario_file), "--query", query, "--seed", "13",
             "--iterations", "60"],
        )
        assert result.exit_code == 0, result.output
        assert result.output == (GOLDEN / "cli_explain_factual.txt").read_text()

    def test_t3_reports_budget(self, runner, scenario_file):
        query = json.dumps(
            {"qtype": "tree_expansion", "bindings": {"passenger": 1, "alt_vehicle": 2}}
        )
        result = runner.invoke(
            main,
            ["explain", str(scenario_file), "--query", query, "--budget", "74",
             "--iterations", "40"],
        )
        assert result.exit_code == 0, result.output
        assert "74 new future traffic and route situations" in result.output
        assert "new_iterations=74" in result.output

    def test_contrastive_capacity_variant(self, runner, tmp_path):
        doc = scenario_doc(
            vehicles=[
                {"id": 1, "capacity": 8, "location": 1},
                {"id": 2, "capacity": 0, "location": 2},
            ]
        )
        path = tmp_path / "cap.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        query = json.dumps({"qtype": "contrastive", "bindings": {"passenger": 1, "alt_vehicle": 2}})
        result = runner.invoke(
            main, ["explain", str(path), "--query", query, "--iterations", "30"]
        )
        assert result.exit_code == 0, result.output
        assert "not a viable option" in result.output
        assert "verdict_phi3=False" in result.output
        assert "verdict_phi1=skipped" in result.output

    def test_binding_error_exits_nonzero(self, runner, scenario_file):
        query = json.dumps({"qtype": "factual", "bindings": {"passenger": 1}})
        result = runner.invoke(main, ["explain", str(scenario_file), "--query", query])
        assert result.exit_code == 1
        assert "error=" in result.output


class TestServe:
    def test_serve_starts_and_answers(self, scenario_file):
        import socket
        import subprocess
        import sys
        import time
        import urllib.request

        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            port = probe.getsockname()[1]
        process = subprocess.Popen(
            [sys.executable, "-m", "paraplan.cli", "serve", "--port", str(port)],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
        )
        try:
            deadline = time.time() + 15
            last_error = None
            while time.time() < deadline:
                try:
                    with urllib.request.urlopen(f"http://127.0.0.1:{port}/docs", timeout=1) as response:
                        assert response.status == 200
                        break
                except Exception as exc:  # noqa: BLE001 - retry until the server is up
                    last_error = exc
                    time.sleep(0.2)
            else:
                pytest.fail(f"service did not come up: {last_error}")
            payload = json.dumps({"scenario": scenario_doc()}).encode()
            request = urllib.request.Request(
                f"http://127.0.0.1:{port}/sessions",
                data=payload,
                headers={"Content-Type": "application/json"},
            )
            with urllib.request.urlopen(request, timeout=5) as response:
                assert response.status == 201
        finally:
            process.terminate()
            process.wait(timeout=10)
