"""Parameter sweeps over seeded pipeline runs, with CSV emission.

One row per (grid value, seed) records the final average value, the
gate-passing device counts, the planner round count, and the wall-clock
runtime; per-value mean and standard-deviation rows are appended. Task
parameter sweeps retrain nothing: the trained model is shared across
the grid for each seed, since only the task changes. Behavior sweeps
(packet loss rate, forwarding success rate) regenerate logs and retrain
per value.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

from .config import AppConfig
from .errors import ConfigError
from .pipeline import PipelineReuse, run_pipeline
from .scenario import Behavior, Scenario, generate_scenario

TASK_PARAMS = (
    "c_tf",
    "c_ec",
    "s_tf_soft",
    "s_tf_hard",
    "s_ec_soft",
    "s_ec_hard",
    "size_bits",
    "density",
)
BEHAVIOR_PARAMS = ("plr", "tfsr")
SWEEP_PARAMS = TASK_PARAMS + BEHAVIOR_PARAMS

CSV_COLUMNS = (
    "param",
    "value",
    "seed",
    "avg_voc",
    "trusted_terminals",
    "trusted_ecs",
    "rounds",
    "runtime_seconds",
    "kind",
)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: parameter name, value grid, and one seed per repeat."""

    param: str
    grid: tuple[float, ...]
    seeds: tuple[int, ...]
    affected_fraction: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep parameter {self.param!r}; have {SWEEP_PARAMS}")
        if not self.grid:
            raise ConfigError("sweep grid must not be empty")
        if not self.seeds:
            raise ConfigError("sweep needs at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("sweep seeds must be distinct")
        if not (0.0 < self.affected_fraction <= 1.0):
            raise ConfigError("affected_fraction must lie in (0, 1]")

    @property
    def repetitions(self) -> int:
        return len(self.seeds)


def affected_terminals(scenario: Scenario, fraction: float) -> list[str]:
    """Deterministic choice of the swept-behavior terminals (owner exempt)."""
    candidates = sorted(d for d in scenario.topology.terminals() if d != scenario.owner)
    count = math.ceil(fraction * len(candidates))
    return candidates[:count]


def apply_behavior_value(
    scenario: Scenario, param: str, value: float, fraction: float
) -> Scenario:
    behaviors = dict(scenario.behaviors)
    for dev_id in affected_terminals(scenario, fraction):
        old = behaviors[dev_id]
        if param == "plr":
            behaviors[dev_id] = Behavior(plr=value, tfsr=old.tfsr, ec_success=old.ec_success)
        else:
            behaviors[dev_id] = Behavior(plr=old.plr, tfsr=value, ec_success=old.ec_success)
    return scenario.with_behaviors(behaviors)


def run_sweep(
    spec: SweepSpec,
    config: AppConfig,
    task_name: str = "face_recognition",
    log_seed_offset: int = 1,
    train_seed_offset: int = 2,
) -> list[dict]:
    """All run rows plus per-value mean/std summary rows."""
    rows: list[dict] = []
    for seed in spec.seeds:
        scenario = generate_scenario(config.generation, config.radio, config.tasks, seed)
        base_task = scenario.tasks[task_name] if task_name in scenario.tasks else config.task(
            task_name, scenario.owner
        )
        log_seed = seed + log_seed_offset
        train_seed = seed + train_seed_offset
        reuse: PipelineReuse | None = None
        if spec.param in TASK_PARAMS:
            warm = run_pipeline(scenario, base_task, config, log_seed, train_seed)
            reuse = PipelineReuse(
                model=warm.model, graph_edge_count=warm.report["counts"]["graph_edges"]
            )
        for value in spec.grid:
            if spec.param in TASK_PARAMS:
                task = replace(base_task, **{spec.param: value})
                run_scenario = scenario
            else:
                task = base_task
                run_scenario = apply_behavior_value(
                    scenario, spec.param, value, spec.affected_fraction
                )
            start = time.perf_counter()
            run = run_pipeline(run_scenario, task, config, log_seed, train_seed, reuse=reuse)
            runtime = time.perf_counter() - start
            final = run.outcome.final
            rows.append(
                {
                    "param": spec.param,
                    "value": value,
                    "seed": seed,
                    "avg_voc": final.avg_voc if final is not None else 0.0,
                    "trusted_terminals": run.report["counts"]["trusted_terminals"],
                    "trusted_ecs": run.report["counts"]["trusted_ecs"],
                    "rounds": run.outcome.rounds_to_converge,
                    "runtime_seconds": runtime,
                    "kind": "run",
                }
            )
    rows.extend(summarize(spec, rows))
    return rows


def summarize(spec: SweepSpec, rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation per grid value."""
    numeric = ("avg_voc", "trusted_terminals", "trusted_ecs", "rounds", "runtime_seconds")
    out: list[dict] = []
    for value in spec.grid:
        group = [r for r in rows if r["kind"] == "run" and r["value"] == value]
        if not group:
            continue
        for kind, agg in (("mean", _mean), ("std", _std)):
            entry = {
                "param": spec.param,
                "value": value,
                "seed": "",
                "kind": kind,
            }
            for col in numeric:
                entry[col] = agg([r[col] for r in group])
            out.append(entry)
    return out


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def _std(xs: list[float]) -> float:
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def grid_means(rows: list[dict], column: str) -> list[tuple[float, float]]:
    """(value, mean) pairs in grid order, from the summary rows."""
    return [
        (r["value"], r[column]) for r in rows if r["kind"] == "mean"
    ]


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(row[c]) for c in CSV_COLUMNS) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
