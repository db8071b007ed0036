"""Physical, economic, and task models shared by every other module.

Covers the wireless link rate, per-hop transfer and compute times, the
time-based service fees, the piecewise-exponential value-of-completion
(VoC) score, and whole-path evaluation. All functions here are pure and
operate on immutable inputs, so they are safe to call concurrently.

Unit conventions (also exposed as constants): decimal megabytes
(1 MB = 10^6 bytes = 8 * 10^6 bits) and dBm-to-watts via
10^((dBm - 30) / 10). All file formats carry SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, PlanningError

BITS_PER_MEGABYTE = 8_000_000.0


def megabytes_to_bits(mb: float) -> float:
    return mb * BITS_PER_MEGABYTE


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


class DeviceKind(str, Enum):
    TERMINAL = "terminal"
    EDGE_COMPUTE = "edge_compute"


@dataclass(frozen=True)
class Device:
    """A terminal (task-forwarding) or edge-compute node.

    ``price`` is the service price in currency per second; ``cpu_hz`` is
    required (and meaningful) only for edge-compute devices.
    """

    id: str
    kind: DeviceKind
    position: tuple[float, float]
    tx_power: float
    price: float
    cpu_hz: float | None = None

    def __post_init__(self):
        if self.tx_power <= 0:
            raise ConfigError(f"device {self.id}: tx_power must be > 0")
        if self.price < 0:
            raise ConfigError(f"device {self.id}: price must be >= 0")
        if self.kind is DeviceKind.EDGE_COMPUTE:
            if self.cpu_hz is None or self.cpu_hz <= 0:
                raise ConfigError(
                    f"device {self.id}: edge-compute devices need cpu_hz > 0"
                )

    @property
    def is_ec(self) -> bool:
        return self.kind is DeviceKind.EDGE_COMPUTE


@dataclass(frozen=True)
class Task:
    """Workload descriptor: size, processing density, trust and fee thresholds.

    ``c_tf`` / ``c_ec`` are the minimum trust levels demanded of forwarding
    and compute devices. The soft threshold is the fee below which the
    owner's perceived value is 1; the hard threshold is the fee above
    which it is 0.
    """

    owner: str
    density: float
    size_bits: float
    c_tf: float
    c_ec: float
    s_tf_soft: float
    s_tf_hard: float
    s_ec_soft: float
    s_ec_hard: float

    def __post_init__(self):
        if not (0.0 <= self.c_tf <= 1.0 and 0.0 <= self.c_ec <= 1.0):
            raise ConfigError("trust thresholds must lie in [0, 1]")
        if not (0.0 < self.s_tf_soft <= self.s_tf_hard):
            raise ConfigError("need 0 < s_tf_soft <= s_tf_hard")
        if not (0.0 < self.s_ec_soft <= self.s_ec_hard):
            raise ConfigError("need 0 < s_ec_soft <= s_ec_hard")
        if self.size_bits <= 0:
            raise ConfigError("size_bits must be > 0")
        if self.density <= 0:
            raise ConfigError("density must be > 0")


@dataclass(frozen=True)
class RadioEnv:
    """Shared channel parameters: bandwidth in Hz and noise power in watts."""

    bandwidth_hz: float
    noise_watts: float

    def __post_init__(self):
        if self.bandwidth_hz <= 0 or self.noise_watts <= 0:
            raise ConfigError("bandwidth_hz and noise_watts must be > 0")


class Topology:
    """Undirected communication graph over a set of devices.

    Links are stored as normalized (low, high) id pairs. Instances are
    immutable after construction and safe to share.
    """

    def __init__(self, devices: list[Device] | tuple[Device, ...], links):
        by_id: dict[str, Device] = {}
        for dev in devices:
            if dev.id in by_id:
                raise ConfigError(f"duplicate device id {dev.id!r}")
            by_id[dev.id] = dev
        norm: set[tuple[str, str]] = set()
        for a, b in links:
            if a == b:
                raise ConfigError(f"self-link on device {a!r}")
            if a not in by_id or b not in by_id:
                raise ConfigError(f"link ({a!r}, {b!r}) references unknown device")
            norm.add((a, b) if a < b else (b, a))
        self._devices = dict(sorted(by_id.items()))
        self._links = frozenset(norm)
        adj: dict[str, set[str]] = {d: set() for d in self._devices}
        for a, b in self._links:
            adj[a].add(b)
            adj[b].add(a)
        self._adj = {d: tuple(sorted(n)) for d, n in adj.items()}

    @property
    def devices(self) -> dict[str, Device]:
        return dict(self._devices)

    @property
    def links(self) -> frozenset[tuple[str, str]]:
        return self._links

    def __contains__(self, device_id: str) -> bool:
        return device_id in self._devices

    def device(self, device_id: str) -> Device:
        return self._devices[device_id]

    def device_ids(self) -> tuple[str, ...]:
        return tuple(self._devices)

    def terminals(self) -> tuple[str, ...]:
        return tuple(d for d, dev in self._devices.items() if not dev.is_ec)

    def ecs(self) -> tuple[str, ...]:
        return tuple(d for d, dev in self._devices.items() if dev.is_ec)

    def neighbors(self, device_id: str) -> tuple[str, ...]:
        return self._adj[device_id]

    def has_link(self, a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) in self._links

    def subgraph(self, keep_ids) -> "Topology":
        keep = set(keep_ids)
        devices = [d for d in self._devices.values() if d.id in keep]
        links = [(a, b) for a, b in self._links if a in keep and b in keep]
        return Topology(devices, links)

    def reachable_from(self, start: str) -> set[str]:
        """Connected component of ``start`` (breadth-first)."""
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for d in frontier:
                for n in self._adj[d]:
                    if n not in seen:
                        seen.add(n)
                        nxt.append(n)
            frontier = nxt
        return seen


@dataclass(frozen=True)
class PathResult:
    """A scored path from the task owner (hop 0) to an edge-compute device.

    ``per_hop_voc`` and ``per_hop_fees`` cover hops 1..K; the owner at
    hop 0 contributes no value term.
    """

    hops: tuple[str, ...]
    per_hop_voc: tuple[float, ...]
    avg_voc: float
    per_hop_fees: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "hops": list(self.hops),
            "per_hop_voc": list(self.per_hop_voc),
            "avg_voc": self.avg_voc,
            "per_hop_fees": list(self.per_hop_fees),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PathResult":
        return cls(
            hops=tuple(d["hops"]),
            per_hop_voc=tuple(d["per_hop_voc"]),
            avg_voc=d["avg_voc"],
            per_hop_fees=tuple(d["per_hop_fees"]),
        )


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def shannon_rate(tx_power: float, dist: float, env: RadioEnv) -> float:
    """Link rate in bits/s: bandwidth * log2(1 + p * d^-4 / noise).

    The path-gain model is a pure fourth-power distance law, so the rate
    is singular at zero distance.
    """
    if dist <= 0.0:
        raise ConfigError("transmission rate undefined at zero distance")
    if tx_power < 0.0:
        raise ConfigError("tx_power must be >= 0")
    gain = dist ** -4
    return env.bandwidth_hz * math.log2(1.0 + tx_power * gain / env.noise_watts)


def transmission_rate(
    sender: Device, receiver_position: tuple[float, float], env: RadioEnv
) -> float:
    """Instantaneous rate from ``sender`` toward a receiver position."""
    return shannon_rate(sender.tx_power, distance(sender.position, receiver_position), env)


def hop_transfer_time(size_bits: float, rate: float) -> float:
    """Seconds to move ``size_bits`` over a link with the given rate."""
    if size_bits < 0:
        raise ConfigError("size_bits must be >= 0")
    if size_bits == 0:
        return 0.0
    if rate <= 0:
        raise PlanningError("link rate is zero: hop unreachable")
    return size_bits / rate


def forwarding_fee(price: float, t_receive: float, t_send: float) -> float:
    """Time-based fee covering both the receive and send phases."""
    if price < 0 or t_receive < 0 or t_send < 0:
        raise ConfigError("fee inputs must be >= 0")
    return price * (t_receive + t_send)


def voc(fee: float, soft: float, hard: float) -> float:
    """Perceived value of a priced service, in [0, 1].

    1 below the soft threshold, 0 above the hard threshold, and an
    exponential decay exp(-(fee - soft) / soft) in between. Continuous
    at fee == soft.
    """
    if soft <= 0:
        raise ConfigError("soft threshold must be > 0")
    if hard < soft:
        raise ConfigError("hard threshold must be >= soft threshold")
    if fee < soft:
        return 1.0
    if fee <= hard:
        return math.exp(-abs((fee - soft) / soft))
    return 0.0


def computing_time(task: Task, ec: Device) -> float:
    """Seconds for ``ec`` to execute the task: density * size / cpu_hz."""
    if not ec.is_ec:
        raise ConfigError(f"device {ec.id} is not an edge-compute device")
    return task.density * task.size_bits / ec.cpu_hz


def average_voc(values) -> float:
    vals = list(values)
    if not vals:
        raise ConfigError("average_voc of an empty list")
    return sum(vals) / len(vals)


def hop_voc_terminal(
    task: Task, prev: Device, cur: Device, nxt: Device, env: RadioEnv
) -> tuple[float, float]:
    """(value, fee) of terminal ``cur`` relaying between ``prev`` and ``nxt``."""
    t_recv = hop_transfer_time(task.size_bits, transmission_rate(prev, cur.position, env))
    t_send = hop_transfer_time(task.size_bits, transmission_rate(cur, nxt.position, env))
    fee = forwarding_fee(cur.price, t_recv, t_send)
    return voc(fee, task.s_tf_soft, task.s_tf_hard), fee


def hop_voc_ec(task: Task, ec: Device) -> tuple[float, float]:
    """(value, fee) of the final compute hop on ``ec``."""
    fee = computing_time(task, ec) * ec.price
    return voc(fee, task.s_ec_soft, task.s_ec_hard), fee


def evaluate_path(
    topology: Topology, env: RadioEnv, task: Task, hops
) -> PathResult:
    """Score a complete owner-to-EC path.

    Hop k in 1..K-1 must be a terminal; its value is the VoC of its
    forwarding fee, where the send time is computed toward the actual
    next hop. Hop K must be an edge-compute device and is valued on its
    compute fee. The result averages hops 1..K (the owner contributes
    no value term).
    """
    ids = [h.id if isinstance(h, Device) else h for h in hops]
    if len(ids) < 2:
        raise PlanningError("a path needs at least the owner and one EC device")
    if len(set(ids)) != len(ids):
        raise PlanningError("path repeats a device")
    for h in ids:
        if h not in topology:
            raise PlanningError(f"path device {h!r} not in topology")
    if ids[0] != task.owner:
        raise PlanningError(f"path must start at the task owner {task.owner!r}")
    devs = [topology.device(h) for h in ids]
    if devs[0].is_ec:
        raise PlanningError("task owner must be a terminal device")
    if not devs[-1].is_ec:
        raise PlanningError("path must end at an edge-compute device")
    for d in devs[1:-1]:
        if d.is_ec:
            raise PlanningError(f"intermediate hop {d.id!r} is not a terminal")
    for a, b in zip(ids, ids[1:]):
        if not topology.has_link(a, b):
            raise PlanningError(f"hop pair ({a!r}, {b!r}) is not linked")

    values: list[float] = []
    fees: list[float] = []
    for k in range(1, len(devs) - 1):
        v, fee = hop_voc_terminal(task, devs[k - 1], devs[k], devs[k + 1], env)
        values.append(v)
        fees.append(fee)
    v, fee = hop_voc_ec(task, devs[-1])
    values.append(v)
    fees.append(fee)
    return PathResult(
        hops=tuple(ids),
        per_hop_voc=tuple(values),
        avg_voc=average_voc(values),
        per_hop_fees=tuple(fees),
    )
