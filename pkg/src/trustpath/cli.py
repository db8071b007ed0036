"""Command-line interface.

Verbs: generate, logs, train, plan, pipeline, sweep, oracle. Every verb
accepts ``--config FILE`` (JSON, documented in the README) and repeated
``--set section.key=value`` overrides.

Exit codes: 0 success, 2 configuration error, 3 stage or data failure,
4 planner did not converge within the round budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .collab import build_graph, read_log, write_log
from .config import AppConfig, apply_overrides, load_config
from .errors import ConfigError, TrustPathError
from .gnn import filter_topology, load_checkpoint, save_checkpoint, train, write_metrics_csv
from .pipeline import compute_gates, report_json, run_pipeline
from .planning import brute_force_optimal, run_planning
from .scenario import generate_scenario, load_scenario, save_scenario, synthesize_logs
from .sweeps import SweepSpec, run_sweep, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_NONCONVERGED = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config value (JSON-parsed); repeatable",
    )


def _config(args) -> AppConfig:
    return apply_overrides(load_config(args.config), args.overrides)


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_task(config: AppConfig, scenario, name: str):
    # config (with any --set overrides) wins; the scenario file's task
    # block is a snapshot that covers names the config does not define
    if name in config.tasks:
        return config.task(name, scenario.owner)
    if name in scenario.tasks:
        return scenario.tasks[name]
    raise ConfigError(
        f"unknown task {name!r}; config has {sorted(config.tasks)}, "
        f"scenario has {sorted(scenario.tasks)}"
    )


def cmd_generate(args) -> int:
    config = _config(args)
    scenario = generate_scenario(config.generation, config.radio, config.tasks, args.seed)
    save_scenario(scenario, args.out)
    print(f"wrote scenario with {len(scenario.topology.device_ids())} devices to {args.out}")
    return EXIT_OK


def cmd_logs(args) -> int:
    config = _config(args)
    scenario = load_scenario(args.scenario)
    forward, compute = synthesize_logs(
        scenario,
        args.tasks_per_pair or config.logs.tasks_per_pair,
        args.seed,
        args.packets_per_task or config.logs.packets_per_task,
    )
    write_log(args.out, [*forward, *compute])
    print(f"wrote {len(forward)} forward and {len(compute)} compute records to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config(args)
    scenario = load_scenario(args.scenario)
    forward, compute = read_log(args.logs)
    graph = build_graph(
        scenario.topology.devices.values(), forward, compute, config.alpha1, config.alpha2
    )
    model = train(graph, config.training, args.seed)
    save_checkpoint(model, args.model_out)
    if args.metrics_out:
        write_metrics_csv(model.history, args.metrics_out)
    rmse = model.metrics.get("rmse")
    mae = model.metrics.get("mae")
    print(
        f"trained on {len(graph.edges)} edges; held-out rmse="
        f"{rmse if rmse is None else f'{rmse:.4f}'} mae="
        f"{mae if mae is None else f'{mae:.4f}'}"
    )
    return EXIT_OK


def _plan_inputs(args, config: AppConfig):
    scenario = load_scenario(args.scenario)
    model = load_checkpoint(args.model)
    task = _load_task(config, scenario, args.task)
    g_new = filter_topology(scenario.topology, model, task, scenario.owner)
    gates, _ = compute_gates(scenario, task, g_new, config)
    return scenario, task, g_new, gates


def cmd_plan(args) -> int:
    config = _config(args)
    scenario, task, g_new, gates = _plan_inputs(args, config)
    trace: list | None = [] if args.trace_out else None
    outcome = run_planning(
        g_new,
        scenario.env,
        task,
        gates,
        max_rounds=config.planning.max_rounds,
        scheduler=config.planning.scheduler,
        seed=config.planning.async_seed,
        trace_sink=trace,
    )
    _write_json(args.out, outcome.to_dict())
    if args.trace_out:
        _write_json(args.trace_out, trace)
    if outcome.final is None:
        print("no trusted path found")
    else:
        print(
            f"best path {' -> '.join(outcome.final.hops)} "
            f"avg_voc={outcome.final.avg_voc:.4f} rounds={outcome.rounds_to_converge}"
        )
    return EXIT_OK if outcome.converged else EXIT_NONCONVERGED


def cmd_oracle(args) -> int:
    config = _config(args)
    scenario, task, g_new, gates = _plan_inputs(args, config)
    best = brute_force_optimal(
        g_new, scenario.env, task, gates, node_bound=args.node_bound
    )
    payload = {"found": best is not None}
    if best is not None:
        payload["path"] = best.to_dict()
        print(f"optimum {' -> '.join(best.hops)} avg_voc={best.avg_voc:.4f}")
    else:
        print("no feasible trusted path exists")
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = _config(args)
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        scenario = generate_scenario(
            config.generation, config.radio, config.tasks, args.scenario_seed
        )
    task = _load_task(config, scenario, args.task)
    run = run_pipeline(
        scenario, task, config, log_seed=args.log_seed, train_seed=args.train_seed
    )
    with open(args.report_out, "w", encoding="utf-8") as fh:
        fh.write(report_json(run.report))
    if args.timings_out:
        _write_json(args.timings_out, run.timings)
    total = sum(run.timings.values())
    stages = " ".join(f"{k}={v:.2f}s" for k, v in run.timings.items())
    print(f"report written to {args.report_out} (total {total:.2f}s: {stages})", file=sys.stderr)
    final = run.outcome.final
    if final is None:
        print("no trusted path found")
    else:
        print(f"best path {' -> '.join(final.hops)} avg_voc={final.avg_voc:.4f}")
    return EXIT_OK if run.outcome.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    config = _config(args)
    spec = SweepSpec(
        param=args.param,
        grid=tuple(float(v) for v in args.grid.split(",")),
        seeds=tuple(int(s) for s in args.seeds.split(",")),
        affected_fraction=args.affected_fraction,
    )
    rows = run_sweep(spec, config, task_name=args.task)
    write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustpath",
        description="Trust-aware multi-hop collaborator selection toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a scenario file")
    _add_common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("logs", help="synthesize collaboration logs for a scenario")
    _add_common(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--tasks-per-pair", type=int)
    p.add_argument("--packets-per-task", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_logs)

    p = sub.add_parser("train", help="train the trust model from logs")
    _add_common(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--logs", required=True)
    p.add_argument("--seed", type=int, default=2)
    p.add_argument("--model-out", required=True)
    p.add_argument("--metrics-out")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("plan", help="filter, gate, and run distributed planning")
    _add_common(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--task", default="face_recognition")
    p.add_argument("--out", required=True)
    p.add_argument("--trace-out")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("oracle", help="exhaustive optimum on a small instance")
    _add_common(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--task", default="face_recognition")
    p.add_argument("--node-bound", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("pipeline", help="run the full pipeline and write a report")
    _add_common(p)
    p.add_argument("--scenario", help="scenario file; omit to generate from config")
    p.add_argument("--scenario-seed", type=int, default=0)
    p.add_argument("--log-seed", type=int, default=1)
    p.add_argument("--train-seed", type=int, default=2)
    p.add_argument("--task", default="face_recognition")
    p.add_argument("--report-out", required=True)
    p.add_argument("--timings-out")
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("sweep", help="sweep one parameter over a value grid")
    _add_common(p)
    p.add_argument("--param", required=True)
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--task", default="face_recognition")
    p.add_argument("--affected-fraction", type=float, default=0.8)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrustPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    raise SystemExit(main())
