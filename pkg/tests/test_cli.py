"""CLI verbs, file artifacts, config overrides, and exit codes."""

import json

import pytest

from trustpath.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Scenario, logs, and model files shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    fast = [
        "--set", "generation.terminals_class_a=3",
        "--set", "generation.terminals_class_b=3",
        "--set", "generation.ec_count=2",
        "--set", "generation.arena_m=90.0",
        "--set", "generation.link_radius_m=60.0",
        "--set", "training.embed_dim=8",
        "--set", "training.layer_dims=[4,4]",
        "--set", "training.mlp_hidden=8",
        "--set", "training.epochs=25",
    ]
    scenario = root / "scenario.json"
    logs = root / "logs.jsonl"
    model = root / "model.json"
    assert main(["generate", "--seed", "4", "--out", str(scenario), *fast]) == 0
    assert main(["logs", "--scenario", str(scenario), "--seed", "1",
                 "--tasks-per-pair", "20", "--out", str(logs), *fast]) == 0
    assert main(["train", "--scenario", str(scenario), "--logs", str(logs),
                 "--seed", "2", "--model-out", str(model),
                 "--metrics-out", str(root / "metrics.csv"), *fast]) == 0
    return {"root": root, "scenario": scenario, "logs": logs, "model": model, "fast": fast}


class TestVerbs:
    def test_generate_creates_scenario(self, workdir):
        data = json.loads(workdir["scenario"].read_text())
        assert data["format"] == "trustpath-scenario"
        assert len(data["devices"]) == 8

    def test_metrics_csv_written(self, workdir):
        lines = (workdir["root"] / "metrics.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_loss,rmse,mae"
        assert len(lines) == 25 + 2  # per-epoch rows plus header and final row

    def test_plan_writes_outcome(self, workdir):
        out = workdir["root"] / "plan.json"
        trace = workdir["root"] / "trace.json"
        code = main(["plan", "--scenario", str(workdir["scenario"]),
                     "--model", str(workdir["model"]), "--task", "face_recognition",
                     "--out", str(out), "--trace-out", str(trace), *workdir["fast"]])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["format"] == "trustpath-plan"
        assert payload["converged"] is True
        assert json.loads(trace.read_text())

    def test_oracle_verb(self, workdir):
        out = workdir["root"] / "oracle.json"
        code = main(["oracle", "--scenario", str(workdir["scenario"]),
                     "--model", str(workdir["model"]), "--out", str(out),
                     *workdir["fast"]])
        assert code == 0
        assert "found" in json.loads(out.read_text())

    def test_pipeline_determinism_and_timings(self, workdir):
        r1 = workdir["root"] / "report1.json"
        r2 = workdir["root"] / "report2.json"
        t1 = workdir["root"] / "timings.json"
        args = ["pipeline", "--scenario", str(workdir["scenario"]),
                "--log-seed", "1", "--train-seed", "2", *workdir["fast"]]
        assert main([*args, "--report-out", str(r1), "--timings-out", str(t1)]) == 0
        assert main([*args, "--report-out", str(r2)]) == 0
        assert r1.read_bytes() == r2.read_bytes()
        timings = json.loads(t1.read_text())
        assert "train" in timings

    def test_sweep_writes_csv(self, workdir):
        out = workdir["root"] / "sweep.csv"
        code = main(["sweep", "--param", "c_tf", "--grid", "0.1,0.9",
                     "--seeds", "3", "--out", str(out), *workdir["fast"]])
        assert code == 0
        assert out.read_text().startswith("param,value,seed")


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"unknown_section": {}}')
        assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "s.json")]) == 2

    def test_bad_override_is_2(self, tmp_path):
        assert main(["generate", "--set", "training.epochs=0",
                     "--out", str(tmp_path / "s.json")]) == 2

    def test_missing_scenario_is_2(self, tmp_path):
        assert main(["logs", "--scenario", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "l.jsonl")]) == 2

    def test_stage_failure_is_3(self, workdir, tmp_path):
        # corrupt log file: ingestion failure is a stage/data error
        bad_logs = tmp_path / "bad.jsonl"
        bad_logs.write_text("this is not a record\n")
        code = main(["train", "--scenario", str(workdir["scenario"]),
                     "--logs", str(bad_logs), "--model-out", str(tmp_path / "m.json"),
                     *workdir["fast"]])
        assert code == 3

    def test_nonconvergence_is_4(self, workdir, tmp_path):
        out = tmp_path / "plan.json"
        code = main(["plan", "--scenario", str(workdir["scenario"]),
                     "--model", str(workdir["model"]), "--out", str(out),
                     "--set", "planning.max_rounds=1", *workdir["fast"]])
        assert code == 4


class TestOverrides:
    def test_task_override_changes_threshold(self, workdir, tmp_path):
        out = tmp_path / "plan.json"
        code = main(["plan", "--scenario", str(workdir["scenario"]),
                     "--model", str(workdir["model"]), "--out", str(out),
                     "--set", 'tasks.face_recognition.c_tf=1.0',
                     "--set", 'tasks.face_recognition.c_ec=1.0',
                     *workdir["fast"]])
        # no device passes a threshold of 1.0: no path, still converged
        assert code == 0
        assert json.loads(out.read_text())["final"] is None