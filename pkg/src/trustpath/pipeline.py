"""End-to-end pipeline: logs, trust graph, training, gating, planning.

The serialized report is a pure function of (scenario seed, log seed,
training seed): stage wall-clock timings are therefore kept out of the
report payload and returned separately, so two runs with identical
seeds produce byte-identical report JSON.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from .collab import build_graph
from .config import AppConfig
from .errors import ConfigError, StageError, TrustPathError
from .gnn import TrainedTrustModel, filter_topology, train
from .network import Task, Topology
from .planning import PlanOutcome, brute_force_optimal, run_planning
from .resources import (
    ResourceVerdict,
    build_prompt,
    evaluate_ec,
    evaluate_terminal,
    external_evaluate,
)
from .scenario import Scenario, synthesize_logs

REPORT_FORMAT = "trustpath-report"
REPORT_VERSION = 1


@dataclass
class PipelineRun:
    """Everything a caller might want: the report plus live objects."""

    report: dict
    timings: dict[str, float]
    model: TrainedTrustModel
    g_new: Topology
    gates: dict[str, bool]
    outcome: PlanOutcome


@dataclass(frozen=True)
class PipelineReuse:
    """Pre-computed early stages, for sweeps that only change the task."""

    model: TrainedTrustModel
    graph_edge_count: int


class _StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, stage: str, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except TrustPathError as exc:
            raise StageError(stage, exc) from exc
        self.timings[stage] = time.perf_counter() - start
        return result


def compute_gates(
    scenario: Scenario,
    task: Task,
    g_new: Topology,
    config: AppConfig,
) -> tuple[dict[str, bool], dict[str, ResourceVerdict]]:
    """Resource verdicts for every device in the filtered topology.

    The owner always participates. With an evaluator endpoint
    configured, verdicts come from the external service (fail-closed);
    otherwise from the local rule evaluators.
    """
    gates: dict[str, bool] = {}
    verdicts: dict[str, ResourceVerdict] = {}
    for dev_id in g_new.device_ids():
        dev = g_new.device(dev_id)
        if dev_id == scenario.owner:
            verdicts[dev_id] = ResourceVerdict(1, "owner")
            gates[dev_id] = True
            continue
        profile = scenario.profiles[dev_id]
        if config.evaluator is not None:
            verdict = external_evaluate(config.evaluator, build_prompt(profile, task, dev))
        elif dev.is_ec:
            verdict = evaluate_ec(profile, task, dev)
        else:
            verdict = evaluate_terminal(profile, task)
        verdicts[dev_id] = verdict
        gates[dev_id] = verdict.t_res == 1
    return gates, verdicts


def run_pipeline(
    scenario: Scenario,
    task: Task,
    config: AppConfig,
    log_seed: int = 1,
    train_seed: int = 2,
    reuse: PipelineReuse | None = None,
) -> PipelineRun:
    """Execute logs -> graph -> train -> filter -> gates -> plan -> report.

    ``reuse`` skips the first three stages with an already-trained
    model, which is sound whenever only task parameters changed.
    """
    if task.owner != scenario.owner:
        raise ConfigError(
            f"task owner {task.owner!r} does not match scenario owner {scenario.owner!r}"
        )
    timer = _StageTimer()
    if reuse is None:
        forward, compute = timer.run(
            "logs",
            lambda: synthesize_logs(
                scenario, config.logs.tasks_per_pair, log_seed, config.logs.packets_per_task
            ),
        )
        graph = timer.run(
            "graph",
            lambda: build_graph(
                scenario.topology.devices.values(),
                forward,
                compute,
                config.alpha1,
                config.alpha2,
            ),
        )
        model = timer.run("train", lambda: train(graph, config.training, train_seed))
        edge_count = len(graph.edges)
    else:
        model = reuse.model
        edge_count = reuse.graph_edge_count
        timer.timings.update(logs=0.0, graph=0.0, train=0.0)

    g_new = timer.run(
        "filter", lambda: filter_topology(scenario.topology, model, task, scenario.owner)
    )
    gates, verdicts = timer.run(
        "gates", lambda: compute_gates(scenario, task, g_new, config)
    )
    outcome = timer.run(
        "plan",
        lambda: run_planning(
            g_new,
            scenario.env,
            task,
            gates,
            max_rounds=config.planning.max_rounds,
            scheduler=config.planning.scheduler,
            seed=config.planning.async_seed,
        ),
    )

    oracle_entry = None
    mode = config.planning.oracle
    n_new = len(g_new.device_ids())
    if mode == "force" or (mode == "auto" and n_new <= config.planning.oracle_node_bound):
        best = timer.run(
            "oracle",
            lambda: brute_force_optimal(
                g_new,
                scenario.env,
                task,
                gates,
                node_bound=max(config.planning.oracle_node_bound, n_new),
            ),
        )
        if best is None:
            oracle_entry = {"found": False}
        else:
            oracle_entry = {
                "found": True,
                "avg_voc": best.avg_voc,
                "hops": list(best.hops),
                "matches_plan": bool(
                    outcome.final is not None
                    and abs(outcome.final.avg_voc - best.avg_voc) <= 1e-12
                ),
            }

    topo = scenario.topology
    terminals = set(topo.terminals())
    trusted_terminals = sorted(
        d for d, ok in gates.items() if ok and d in terminals and d != scenario.owner
    )
    trusted_ecs = sorted(d for d, ok in gates.items() if ok and d not in terminals)
    t_his = {
        dev_id: model.t_his(scenario.owner, dev_id)
        for dev_id in topo.device_ids()
        if dev_id != scenario.owner
    }
    report = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "seeds": {"scenario": scenario.seed, "logs": int(log_seed), "train": int(train_seed)},
        "owner": scenario.owner,
        "task": {
            "owner": task.owner,
            "size_bits": task.size_bits,
            "density": task.density,
            "c_tf": task.c_tf,
            "c_ec": task.c_ec,
            "s_tf_soft": task.s_tf_soft,
            "s_tf_hard": task.s_tf_hard,
            "s_ec_soft": task.s_ec_soft,
            "s_ec_hard": task.s_ec_hard,
        },
        "counts": {
            "devices": len(topo.device_ids()),
            "terminals": len(terminals),
            "ecs": len(topo.ecs()),
            "graph_edges": edge_count,
            "filtered_terminals": sum(
                1 for d in g_new.terminals() if d != scenario.owner
            ),
            "filtered_ecs": len(g_new.ecs()),
            "trusted_terminals": len(trusted_terminals),
            "trusted_ecs": len(trusted_ecs),
        },
        "training": {
            "epochs": len(model.history) - 1 if model.history else None,
            "initial_train_loss": model.history[0]["train_loss"] if model.history else None,
            "final_train_loss": model.metrics.get("final_train_loss"),
            "rmse": model.metrics.get("rmse"),
            "mae": model.metrics.get("mae"),
        },
        "reliability": {k: t_his[k] for k in sorted(t_his)},
        "gates": {
            dev_id: {
                "t_res": verdicts[dev_id].t_res,
                "reason": verdicts[dev_id].reason,
                "participates": gates[dev_id],
            }
            for dev_id in sorted(gates)
        },
        "plan": outcome.to_dict(),
        "oracle": oracle_entry,
    }
    return PipelineRun(
        report=report,
        timings=dict(timer.timings),
        model=model,
        g_new=g_new,
        gates=gates,
        outcome=outcome,
    )


def report_json(report: dict) -> str:
    """Canonical serialization used for files and determinism checks."""
    return json.dumps(report, sort_keys=True, indent=1) + "\n"
