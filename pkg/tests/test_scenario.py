import json
import subprocess
import sys
from pathlib import Path

import pytest

from vinesim.errors import ScenarioParseError, ScenarioValidationError
from vinesim.scenario import (
    load_scenario,
    parse_scenario,
    run_scenario,
    write_outputs,
)

REPO = Path(__file__).resolve().parents[1]
SCENARIOS = sorted((REPO / "scenarios").glob("*.json"))


def minimal_scenario(**overrides):
    raw = {
        "format_version": 1,
        "name": "minimal",
        "robot": "reinforced_1m",
        "dt": 0.05,
        "duration": 0.0,
        "actions": [],
        "assertions": [],
    }
    raw.update(overrides)
    return raw


class TestParsing:
    def test_parse_error_carries_line_and_column(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "format_version": 1,\n  "robot": oops\n}\n')
        with pytest.raises(ScenarioParseError) as err:
            load_scenario(path)
        assert err.value.line == 3
        assert err.value.column is not None

    def test_unknown_robot(self):
        with pytest.raises(ScenarioValidationError, match="unknown robot"):
            parse_scenario(minimal_scenario(robot="not_a_robot"))

    def test_unknown_verb(self):
        raw = minimal_scenario(actions=[{"t": 0, "verb": "explode", "value": 1}])
        with pytest.raises(ScenarioValidationError, match="unknown verb"):
            parse_scenario(raw)

    def test_unknown_joint(self):
        raw = minimal_scenario(
            actions=[{"t": 0, "verb": "set_joint_pressure", "target": 9, "value": 1}]
        )
        with pytest.raises(ScenarioValidationError, match="joint"):
            parse_scenario(raw)

    def test_actions_must_be_time_ordered(self):
        raw = minimal_scenario(
            actions=[
                {"t": 5, "verb": "set_trunk_pressure", "value": 1000},
                {"t": 1, "verb": "set_trunk_pressure", "value": 2000},
            ]
        )
        with pytest.raises(ScenarioValidationError, match="time-ordered"):
            parse_scenario(raw)

    def test_format_version_checked(self):
        with pytest.raises(ScenarioValidationError, match="format_version"):
            parse_scenario(minimal_scenario(format_version=2))


class TestReplay:
    def test_empty_action_list_records_initial_state_only(self):
        record = run_scenario(parse_scenario(minimal_scenario()))
        assert len(record.rows) == 1
        row = record.rows[0]
        assert row["t_s"] == 0.0
        assert row["phase"] == "Idle"
        assert row["deployed_length_m"] == 0.0

    def test_csv_columns_match_contract(self):
        record = run_scenario(parse_scenario(minimal_scenario()))
        assert record.columns == [
            "t_s",
            "deployed_length_m",
            "phase",
            "p_t_Pa",
            "p_j_1_Pa",
            "T_1_N",
            "T_2_N",
            "T_3_N",
            "T_4_N",
            "tip_x_m",
            "tip_y_m",
            "tip_deflection_m",
            "localization_index",
        ]
        header = record.csv_text().splitlines()[0]
        assert header == ",".join(record.columns)

    def test_runtime_fault_reported(self):
        raw = minimal_scenario(
            duration=0.2,
            actions=[{"t": 0, "verb": "set_trunk_pressure", "value": 21_500}],
        )
        record = run_scenario(parse_scenario(raw))
        assert record.fault is not None and "Overpressure" in record.fault
        assert not record.passed

    @pytest.mark.parametrize("path", SCENARIOS, ids=[p.stem for p in SCENARIOS])
    def test_golden_scenarios_pass(self, path):
        record = run_scenario(path)
        assert record.fault is None
        failed = [a for a in record.assertion_outcomes if not a.passed]
        assert not failed, failed

    def test_replay_determinism_in_process(self):
        path = REPO / "scenarios" / "fig8_steering_45deg.json"
        first = run_scenario(path)
        second = run_scenario(path)
        assert first.csv_text() == second.csv_text()
        assert first.events_jsonl() == second.events_jsonl()

    def test_write_outputs(self, tmp_path):
        record = run_scenario(parse_scenario(minimal_scenario()))
        csv_path, events_path = write_outputs(record, tmp_path)
        assert csv_path.exists() and events_path.exists()
        assert csv_path.read_text() == record.csv_text()


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "vinesim.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd or REPO,
    )


class TestCli:
    def test_run_golden_exit_zero(self, tmp_path):
        result = run_cli(
            "run", str(REPO / "scenarios" / "fig8_steering_45deg.json"), "--out", str(tmp_path)
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "fig8_steering_45deg.csv").exists()

    def test_parse_error_exit_3(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        result = run_cli("run", str(bad))
        assert result.returncode == 3
        assert "line" in result.stderr

    def test_validation_error_exit_4(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(minimal_scenario(robot="nope")))
        result = run_cli("run", str(bad))
        assert result.returncode == 4

    def test_assertion_failure_exit_1(self, tmp_path):
        raw = minimal_scenario(
            assertions=[{"t": "final", "field": "deployed_length_m", "op": "ge", "value": 1.0}]
        )
        bad = tmp_path / "failing.json"
        bad.write_text(json.dumps(raw))
        result = run_cli("run", str(bad), "--out", str(tmp_path))
        assert result.returncode == 1
        assert "FAIL" in result.stdout

    def test_runtime_fault_exit_5(self, tmp_path):
        raw = minimal_scenario(
            duration=0.2,
            actions=[{"t": 0, "verb": "set_trunk_pressure", "value": 21_500}],
        )
        bad = tmp_path / "fault.json"
        bad.write_text(json.dumps(raw))
        result = run_cli("run", str(bad), "--out", str(tmp_path))
        assert result.returncode == 5

    def test_usage_error_exit_2(self):
        result = run_cli("frobnicate")
        assert result.returncode == 2

    def test_cli_determinism_bytes(self, tmp_path):
        scenario = str(REPO / "scenarios" / "fig13_payload_transport.json")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli("run", scenario, "--out", str(out_a)).returncode == 0
        assert run_cli("run", scenario, "--out", str(out_b)).returncode == 0
        name = "fig13_payload_transport"
        assert (out_a / f"{name}.csv").read_bytes() == (out_b / f"{name}.csv").read_bytes()
        assert (
            out_a / f"{name}.events.jsonl"
        ).read_bytes() == (out_b / f"{name}.events.jsonl").read_bytes()

    def test_bench_output(self):
        result = run_cli("bench")
        assert result.returncode == 0
        assert "Layer jamming (surrogate)" in result.stdout
        assert "18.0" in result.stdout and "34.0" in result.stdout

    def test_calibrate_output(self, tmp_path):
        result = run_cli("calibrate", "--out", str(tmp_path))
        assert result.returncode == 0
        assert (tmp_path / "calibration.csv").exists()
        assert (tmp_path / "load_deflection.csv").exists()
