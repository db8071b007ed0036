"""Sweep execution, caching, and CSV emission."""

import pytest

from trustpath import AppConfig, ConfigError, SweepSpec, run_sweep
from trustpath.config import GenerationConfig
from trustpath.gnn import GNNConfig
from trustpath.sweeps import grid_means, summarize, write_sweep_csv


def fast_config():
    return AppConfig(
        generation=GenerationConfig(
            terminals_class_a=3, terminals_class_b=3, ec_count=2,
            arena_m=90.0, link_radius_m=60.0,
        ),
        training=GNNConfig(embed_dim=8, layer_dims=(4, 4), heads=2, mlp_hidden=8, epochs=25),
    )


class TestSweepSpec:
    def test_validation(self):
        with pytest.raises(ConfigError):
            SweepSpec(param="nope", grid=(0.1,), seeds=(1,))
        with pytest.raises(ConfigError):
            SweepSpec(param="c_tf", grid=(), seeds=(1,))
        with pytest.raises(ConfigError):
            SweepSpec(param="c_tf", grid=(0.1,), seeds=(1, 1))

    def test_repetitions(self):
        spec = SweepSpec(param="c_tf", grid=(0.1, 0.5), seeds=(1, 2, 3))
        assert spec.repetitions == 3


class TestRunSweep:
    def test_task_param_sweep_rows(self):
        spec = SweepSpec(param="c_tf", grid=(0.1, 0.9), seeds=(1, 2))
        rows = run_sweep(spec, fast_config())
        runs = [r for r in rows if r["kind"] == "run"]
        assert len(runs) == 4
        means = [r for r in rows if r["kind"] == "mean"]
        stds = [r for r in rows if r["kind"] == "std"]
        assert len(means) == len(stds) == 2

    def test_threshold_monotone_counts_per_seed(self):
        spec = SweepSpec(param="c_tf", grid=(0.0, 0.5, 0.95), seeds=(3,))
        rows = [r for r in run_sweep(spec, fast_config()) if r["kind"] == "run"]
        counts = [r["trusted_terminals"] for r in rows]
        assert counts == sorted(counts, reverse=True)

    def test_behavior_sweep_runs(self):
        spec = SweepSpec(param="plr", grid=(0.0, 0.4), seeds=(1,))
        rows = run_sweep(spec, fast_config())
        runs = [r for r in rows if r["kind"] == "run"]
        assert len(runs) == 2
        assert {r["value"] for r in runs} == {0.0, 0.4}

    def test_grid_means_ordering(self):
        spec = SweepSpec(param="s_tf_soft", grid=(0.5, 1.5), seeds=(1,))
        rows = run_sweep(spec, fast_config())
        means = grid_means(rows, "avg_voc")
        assert [v for v, _ in means] == [0.5, 1.5]


class TestSummaryMath:
    def test_mean_and_std(self):
        spec = SweepSpec(param="c_tf", grid=(0.2,), seeds=(1, 2, 3))
        rows = [
            {"param": "c_tf", "value": 0.2, "seed": s, "kind": "run",
             "avg_voc": v, "trusted_terminals": 4, "trusted_ecs": 1,
             "rounds": 3, "runtime_seconds": 0.1}
            for s, v in zip((1, 2, 3), (0.2, 0.4, 0.6))
        ]
        summary = summarize(spec, rows)
        mean_row = next(r for r in summary if r["kind"] == "mean")
        std_row = next(r for r in summary if r["kind"] == "std")
        assert mean_row["avg_voc"] == pytest.approx(0.4)
        assert std_row["avg_voc"] == pytest.approx(0.2)  # sample std

    def test_csv_emission(self, tmp_path):
        spec = SweepSpec(param="c_ec", grid=(0.2,), seeds=(5,))
        rows = run_sweep(spec, fast_config())
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("param,value,seed,avg_voc")
        assert len(lines) == len(rows) + 1
