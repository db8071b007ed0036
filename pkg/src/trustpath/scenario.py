"""Scenario synthesis and serialization, plus collaboration-log generation.

A scenario bundles the topology, radio environment, private resource
profiles, and the ground-truth behavior parameters (true packet loss
rate, true forwarding success rate, true compute success probability)
that drive synthetic log generation. Ground truth is the contract that
makes label-recovery tests possible; it never feeds the trust pipeline
directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .collab import ComputeRecord, ForwardRecord
from .config import GenerationConfig, task_from_spec
from .errors import ConfigError
from .network import Device, DeviceKind, RadioEnv, Task, Topology
from .resources import ResourceProfile

SCENARIO_FORMAT = "trustpath-scenario"
SCENARIO_VERSION = 1


@dataclass(frozen=True)
class Behavior:
    """True per-device behavior; ``ec_success`` only for compute devices."""

    plr: float
    tfsr: float
    ec_success: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.plr <= 1.0 and 0.0 <= self.tfsr <= 1.0):
            raise ConfigError("plr and tfsr must lie in [0, 1]")
        if self.ec_success is not None and not (0.0 <= self.ec_success <= 1.0):
            raise ConfigError("ec_success must lie in [0, 1]")


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    env: RadioEnv
    profiles: dict[str, ResourceProfile]
    behaviors: dict[str, Behavior]
    owner: str
    tasks: dict[str, Task]
    seed: int

    def __post_init__(self):
        ids = set(self.topology.device_ids())
        if set(self.profiles) != ids or set(self.behaviors) != ids:
            raise ConfigError("profiles and behaviors must cover exactly the devices")
        if self.owner not in ids or self.topology.device(self.owner).is_ec:
            raise ConfigError("owner must be a terminal device in the topology")
        reachable = self.topology.reachable_from(self.owner)
        if not any(self.topology.device(d).is_ec for d in reachable):
            raise ConfigError("owner cannot reach any edge-compute device")

    def with_behaviors(self, behaviors: dict[str, Behavior]) -> "Scenario":
        return replace(self, behaviors=dict(behaviors))

    def with_task(self, name: str, task: Task) -> "Scenario":
        tasks = dict(self.tasks)
        tasks[name] = task
        return replace(self, tasks=tasks)


def generate_scenario(
    gen: GenerationConfig,
    radio: RadioEnv,
    task_specs: dict[str, dict],
    seed: int,
) -> Scenario:
    """Place devices uniformly in a square arena and link pairs within radius.

    Deterministic per seed. If the owner cannot reach any edge-compute
    device, placement is retried with derived sub-seeds up to the
    configured bound, then fails.
    """
    last_error: Exception | None = None
    for attempt in range(gen.connect_retries):
        rng = np.random.default_rng([int(seed), attempt])
        try:
            return _generate_once(gen, radio, task_specs, seed, rng)
        except ConfigError as exc:
            last_error = exc
    raise ConfigError(
        f"could not generate a connected scenario in {gen.connect_retries} attempts: {last_error}"
    )


def _generate_once(
    gen: GenerationConfig,
    radio: RadioEnv,
    task_specs: dict[str, dict],
    seed: int,
    rng: np.random.Generator,
) -> Scenario:
    ids: list[tuple[str, str]] = []  # (id, class) with class in a/b/ec
    for i in range(gen.terminals_class_a):
        ids.append((f"ta{i:02d}", "a"))
    for i in range(gen.terminals_class_b):
        ids.append((f"tb{i:02d}", "b"))
    for i in range(gen.ec_count):
        ids.append((f"ec{i:02d}", "ec"))

    positions = rng.uniform(0.0, gen.arena_m, size=(len(ids), 2))
    devices: list[Device] = []
    for (dev_id, cls), pos in zip(ids, positions):
        if cls == "ec":
            devices.append(
                Device(
                    id=dev_id,
                    kind=DeviceKind.EDGE_COMPUTE,
                    position=(float(pos[0]), float(pos[1])),
                    tx_power=gen.tx_power_w,
                    price=gen.price_ec,
                    cpu_hz=gen.cpu_hz_ec,
                )
            )
        else:
            devices.append(
                Device(
                    id=dev_id,
                    kind=DeviceKind.TERMINAL,
                    position=(float(pos[0]), float(pos[1])),
                    tx_power=gen.tx_power_w,
                    price=gen.price_class_a if cls == "a" else gen.price_class_b,
                )
            )

    links = []
    for i in range(len(devices)):
        for j in range(i + 1, len(devices)):
            dx = devices[i].position[0] - devices[j].position[0]
            dy = devices[i].position[1] - devices[j].position[1]
            if math.hypot(dx, dy) <= gen.link_radius_m:
                links.append((devices[i].id, devices[j].id))
    topology = Topology(devices, links)

    owner = gen.owner
    if owner is None:
        owner = sorted(d.id for d in devices if not d.is_ec)[0]

    profiles: dict[str, ResourceProfile] = {}
    behaviors: dict[str, Behavior] = {}
    for dev in devices:
        willing = bool(rng.random() >= gen.unwilling_prob)
        healthy = bool(rng.random() >= gen.unhealthy_prob)
        if dev.is_ec:
            profiles[dev.id] = ResourceProfile(
                device=dev.id,
                available_storage_bits=gen.storage_bits_ec,
                available_compute_seconds=gen.compute_budget_s_ec,
                willing=willing,
                healthy=healthy,
            )
            behaviors[dev.id] = Behavior(
                plr=0.0,
                tfsr=1.0,
                ec_success=float(rng.uniform(*gen.ec_success_range)),
            )
        else:
            profiles[dev.id] = ResourceProfile(
                device=dev.id,
                available_storage_bits=gen.storage_bits_terminal,
                willing=willing,
                healthy=healthy,
            )
            behaviors[dev.id] = Behavior(
                plr=float(rng.uniform(*gen.plr_range)),
                tfsr=float(rng.uniform(*gen.tfsr_range)),
            )

    tasks = {name: task_from_spec(spec, owner) for name, spec in task_specs.items()}
    scenario = Scenario(
        topology=topology,
        env=radio,
        profiles=profiles,
        behaviors=behaviors,
        owner=owner,
        tasks=tasks,
        seed=int(seed),
    )
    if gen.behavior_model == "clustered":
        scenario = clustered_behaviors(scenario, seed=seed, good_fraction=gen.good_fraction)
    return scenario


def clustered_behaviors(
    scenario: Scenario,
    seed: int,
    good_fraction: float = 0.5,
    good_tfsr: tuple[float, float] = (0.96, 1.0),
    bad_tfsr: tuple[float, float] = (0.22, 0.26),
    good_ec_success: tuple[float, float] = (0.97, 1.0),
    bad_ec_success: tuple[float, float] = (0.64, 0.66),
    plr: tuple[float, float] = (0.0, 0.02),
) -> Scenario:
    """Split the population into reliable and unreliable device clusters.

    Sender-side loss stays tight so trustee quality dominates the trust
    labels; the default ranges land each cluster inside one quantization
    bin for both terminal and compute edges, giving a cleanly separable
    trust structure.
    """
    rng = np.random.default_rng([int(seed)])
    behaviors: dict[str, Behavior] = {}
    for dev_id in scenario.topology.device_ids():
        dev = scenario.topology.device(dev_id)
        good = bool(rng.random() < good_fraction)
        if dev.is_ec:
            rng_range = good_ec_success if good else bad_ec_success
            behaviors[dev_id] = Behavior(
                plr=0.0, tfsr=1.0, ec_success=float(rng.uniform(*rng_range))
            )
        else:
            rng_range = good_tfsr if good else bad_tfsr
            behaviors[dev_id] = Behavior(
                plr=float(rng.uniform(*plr)), tfsr=float(rng.uniform(*rng_range))
            )
    return scenario.with_behaviors(behaviors)


def ordered_record_pairs(topology: Topology) -> list[tuple[str, str]]:
    """Ordered pairs that produce log records.

    Terminal-terminal links record in both directions, terminal-EC
    links record toward the EC, EC-EC links produce nothing.
    """
    pairs: list[tuple[str, str]] = []
    for a, b in sorted(topology.links):
        dev_a, dev_b = topology.device(a), topology.device(b)
        if not dev_a.is_ec and not dev_b.is_ec:
            pairs.append((a, b))
            pairs.append((b, a))
        elif not dev_a.is_ec and dev_b.is_ec:
            pairs.append((a, b))
        elif dev_a.is_ec and not dev_b.is_ec:
            pairs.append((b, a))
    return sorted(pairs)


def synthesize_logs(
    scenario: Scenario,
    tasks_per_pair: int,
    seed: int,
    packets_per_task: int = 100,
) -> tuple[list[ForwardRecord], list[ComputeRecord]]:
    """Draw per-task records from the ground-truth behavior parameters.

    Losses and forwards are both drawn from the receiving relay's true
    rates: the loss rate describes the quality of links into that
    device, so the resulting direct trust is an attribute of the device
    being evaluated. Compute outcomes are Bernoulli with the EC's true
    success probability. Deterministic per seed.
    """
    if tasks_per_pair < 1:
        raise ConfigError("tasks_per_pair must be >= 1")
    if packets_per_task < 1:
        raise ConfigError("packets_per_task must be >= 1")
    rng = np.random.default_rng([int(seed)])
    forward: list[ForwardRecord] = []
    compute: list[ComputeRecord] = []
    for src, dst in ordered_record_pairs(scenario.topology):
        if scenario.topology.device(dst).is_ec:
            p_success = scenario.behaviors[dst].ec_success
            for _ in range(tasks_per_pair):
                compute.append(
                    ComputeRecord(src=src, dst=dst, outcome=int(rng.random() < p_success))
                )
        else:
            plr = scenario.behaviors[dst].plr
            tfsr = scenario.behaviors[dst].tfsr
            for _ in range(tasks_per_pair):
                lost = int(rng.binomial(packets_per_task, plr))
                received = packets_per_task - lost
                forwarded = int(rng.binomial(received, tfsr)) if received else 0
                forward.append(
                    ForwardRecord(
                        src=src,
                        dst=dst,
                        packets_total=packets_per_task,
                        packets_lost=lost,
                        packets_received=received,
                        packets_forwarded=forwarded,
                    )
                )
    return forward, compute


def scenario_to_dict(scenario: Scenario) -> dict:
    devices = []
    for dev_id in scenario.topology.device_ids():
        dev = scenario.topology.device(dev_id)
        prof = scenario.profiles[dev_id]
        beh = scenario.behaviors[dev_id]
        entry = {
            "id": dev.id,
            "kind": dev.kind.value,
            "position": [dev.position[0], dev.position[1]],
            "tx_power": dev.tx_power,
            "price": dev.price,
            "profile": {
                "available_storage_bits": prof.available_storage_bits,
                "available_compute_seconds": prof.available_compute_seconds,
                "willing": prof.willing,
                "healthy": prof.healthy,
            },
            "behavior": {
                "plr": beh.plr,
                "tfsr": beh.tfsr,
                **({"ec_success": beh.ec_success} if beh.ec_success is not None else {}),
            },
        }
        if dev.cpu_hz is not None:
            entry["cpu_hz"] = dev.cpu_hz
        devices.append(entry)
    tasks = {}
    for name, task in sorted(scenario.tasks.items()):
        tasks[name] = {
            "size_bits": task.size_bits,
            "density": task.density,
            "c_tf": task.c_tf,
            "c_ec": task.c_ec,
            "s_tf_soft": task.s_tf_soft,
            "s_tf_hard": task.s_tf_hard,
            "s_ec_soft": task.s_ec_soft,
            "s_ec_hard": task.s_ec_hard,
        }
    return {
        "format": SCENARIO_FORMAT,
        "version": SCENARIO_VERSION,
        "seed": scenario.seed,
        "owner": scenario.owner,
        "radio": {
            "bandwidth_hz": scenario.env.bandwidth_hz,
            "noise_watts": scenario.env.noise_watts,
        },
        "devices": devices,
        "links": [list(l) for l in sorted(scenario.topology.links)],
        "tasks": tasks,
    }


def scenario_from_dict(data: dict) -> Scenario:
    if data.get("format") != SCENARIO_FORMAT:
        raise ConfigError("not a trustpath scenario file")
    if data.get("version") != SCENARIO_VERSION:
        raise ConfigError(f"unsupported scenario version {data.get('version')!r}")
    devices: list[Device] = []
    profiles: dict[str, ResourceProfile] = {}
    behaviors: dict[str, Behavior] = {}
    for entry in data["devices"]:
        dev = Device(
            id=entry["id"],
            kind=DeviceKind(entry["kind"]),
            position=(float(entry["position"][0]), float(entry["position"][1])),
            tx_power=float(entry["tx_power"]),
            price=float(entry["price"]),
            cpu_hz=float(entry["cpu_hz"]) if "cpu_hz" in entry else None,
        )
        devices.append(dev)
        prof = entry["profile"]
        profiles[dev.id] = ResourceProfile(
            device=dev.id,
            available_storage_bits=float(prof["available_storage_bits"]),
            available_compute_seconds=float(prof.get("available_compute_seconds", 0.0)),
            willing=bool(prof["willing"]),
            healthy=bool(prof["healthy"]),
        )
        beh = entry["behavior"]
        behaviors[dev.id] = Behavior(
            plr=float(beh["plr"]),
            tfsr=float(beh["tfsr"]),
            ec_success=float(beh["ec_success"]) if "ec_success" in beh else None,
        )
    topology = Topology(devices, [tuple(l) for l in data["links"]])
    env = RadioEnv(
        bandwidth_hz=float(data["radio"]["bandwidth_hz"]),
        noise_watts=float(data["radio"]["noise_watts"]),
    )
    owner = data["owner"]
    tasks = {
        name: Task(owner=owner, **{k: float(v) for k, v in spec.items()})
        for name, spec in data.get("tasks", {}).items()
    }
    return Scenario(
        topology=topology,
        env=env,
        profiles=profiles,
        behaviors=behaviors,
        owner=owner,
        tasks=tasks,
        seed=int(data["seed"]),
    )


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_scenario(path: str | Path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return scenario_from_dict(json.load(fh))
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file is not valid JSON: {exc}") from exc
