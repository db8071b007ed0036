"""Task-specific resource trust: rule gate, prompts, and the wire protocol.

A device's resource profile is private. The deterministic rule
evaluators below are the reference gate; an external evaluator (an LLM
agent in a full deployment) can be consulted instead over a small
HTTP+JSON protocol, and any transport or protocol failure degrades to
an untrusted verdict, never to an optimistic one.

Wire protocol (version 1):
    request:  POST <endpoint>  body {"version": 1, "prompt": "<text>"}
    response: 200 with body {"t_res": 0 or 1}

The prompt embeds the rule inputs as JSON inside <device> and <task>
tags, so a deterministic peer (see ``trustpath.stubserver``) can parse
them back out and answer with the rule evaluators themselves.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from dataclasses import dataclass

from .errors import ConfigError
from .network import Device, DeviceKind, Task, computing_time

REASON_OK = "ok"
REASON_STORAGE = "storage"
REASON_UNWILLING = "unwilling"
REASON_UNHEALTHY = "unhealthy"
REASON_COMPUTE = "compute-budget"
REASON_EXTERNAL = "external"
REASON_UNAVAILABLE = "external-unavailable"


@dataclass(frozen=True)
class ResourceProfile:
    """Private per-device resource state.

    Never serialized into planning messages; only the binary verdict
    derived from it may leave the device.
    """

    device: str
    available_storage_bits: float
    available_compute_seconds: float = 0.0
    willing: bool = True
    healthy: bool = True

    def __post_init__(self):
        if self.available_storage_bits < 0:
            raise ConfigError("available_storage_bits must be >= 0")
        if self.available_compute_seconds < 0:
            raise ConfigError("available_compute_seconds must be >= 0")


@dataclass(frozen=True)
class ResourceVerdict:
    t_res: int
    reason: str

    def __post_init__(self):
        if self.t_res not in (0, 1):
            raise ConfigError("t_res must be 0 or 1")


def evaluate_terminal(profile: ResourceProfile, task: Task) -> ResourceVerdict:
    """Storage, willingness, and health checks for a forwarding device.

    The storage bound is inclusive: a buffer exactly as large as the
    task passes.
    """
    if profile.available_storage_bits < task.size_bits:
        return ResourceVerdict(0, REASON_STORAGE)
    if not profile.willing:
        return ResourceVerdict(0, REASON_UNWILLING)
    if not profile.healthy:
        return ResourceVerdict(0, REASON_UNHEALTHY)
    return ResourceVerdict(1, REASON_OK)


def evaluate_ec(profile: ResourceProfile, task: Task, ec: Device) -> ResourceVerdict:
    """Adds the compute-time budget check on top of the terminal rules."""
    if ec.kind is not DeviceKind.EDGE_COMPUTE:
        raise ConfigError(f"device {ec.id!r} is not an edge-compute device")
    if profile.available_storage_bits < task.size_bits:
        return ResourceVerdict(0, REASON_STORAGE)
    if computing_time(task, ec) > profile.available_compute_seconds:
        return ResourceVerdict(0, REASON_COMPUTE)
    if not profile.willing:
        return ResourceVerdict(0, REASON_UNWILLING)
    if not profile.healthy:
        return ResourceVerdict(0, REASON_UNHEALTHY)
    return ResourceVerdict(1, REASON_OK)


def compose_trust(t_his: float, verdict: ResourceVerdict) -> float:
    """Overall trust: historical reliability gated by the resource verdict."""
    return t_his * verdict.t_res


def _task_payload(task: Task, kind: DeviceKind) -> dict:
    payload = {
        "size_bits": task.size_bits,
        "c_tf": task.c_tf,
        "c_ec": task.c_ec,
        "s_tf_soft": task.s_tf_soft,
        "s_tf_hard": task.s_tf_hard,
        "s_ec_soft": task.s_ec_soft,
        "s_ec_hard": task.s_ec_hard,
    }
    if kind is DeviceKind.EDGE_COMPUTE:
        payload["density"] = task.density
    return payload


def _device_payload(profile: ResourceProfile, device: Device) -> dict:
    payload = {
        "id": profile.device,
        "kind": device.kind.value,
        "available_storage_bits": profile.available_storage_bits,
        "available_compute_seconds": profile.available_compute_seconds,
        "willing": profile.willing,
        "healthy": profile.healthy,
    }
    if device.kind is DeviceKind.EDGE_COMPUTE:
        payload["cpu_hz"] = device.cpu_hz
    return payload


def build_prompt(profile: ResourceProfile, task: Task, device: Device) -> str:
    """Deterministic evaluator prompt: same inputs, byte-identical text."""
    device_json = json.dumps(_device_payload(profile, device), sort_keys=True)
    task_json = json.dumps(_task_payload(task, device.kind), sort_keys=True)
    if device.kind is DeviceKind.EDGE_COMPUTE:
        rules = (
            "1. available_storage_bits must be at least size_bits.\n"
            "2. density * size_bits / cpu_hz must not exceed available_compute_seconds.\n"
            "3. willing and healthy must both be true."
        )
        example = (
            '<device>{"available_compute_seconds": 1000.0, "available_storage_bits": 2.0e9, '
            '"cpu_hz": 4.0e9, "healthy": true, "willing": true}</device> with '
            '<task>{"density": 2000.0, "size_bits": 1.6e9}</task> -> 1'
        )
    else:
        rules = (
            "1. available_storage_bits must be at least size_bits.\n"
            "2. willing and healthy must both be true."
        )
        example = (
            '<device>{"available_storage_bits": 2.0e9, "healthy": true, "willing": true}'
            '</device> with <task>{"size_bits": 1.6e9}</task> -> 1'
        )
    return (
        "Decide whether this device's local resources satisfy the task requirements.\n"
        "\n"
        f"<device>\n{device_json}\n</device>\n"
        "\n"
        f"<task>\n{task_json}\n</task>\n"
        "\n"
        f"<rules>\n{rules}\n</rules>\n"
        "\n"
        f"<example>\n{example}\n</example>\n"
        "\n"
        "<output>\nAnswer with exactly one character: 1 if every rule passes, else 0.\n</output>\n"
    )


@dataclass(frozen=True)
class EvaluatorEndpoint:
    """Where and how to reach an external resource evaluator."""

    url: str
    timeout_s: float = 5.0
    retries: int = 0

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be > 0")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")


def external_evaluate(endpoint: EvaluatorEndpoint, payload: str) -> ResourceVerdict:
    """POST the prompt to the evaluator; fail closed on any error."""
    body = json.dumps({"version": 1, "prompt": payload}).encode("utf-8")
    request = urllib.request.Request(
        endpoint.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    for _ in range(endpoint.retries + 1):
        try:
            with urllib.request.urlopen(request, timeout=endpoint.timeout_s) as resp:
                answer = json.loads(resp.read().decode("utf-8"))
            t_res = answer["t_res"]
            if t_res not in (0, 1):
                raise ValueError("t_res must be 0 or 1")
            return ResourceVerdict(int(t_res), REASON_EXTERNAL)
        except (urllib.error.URLError, OSError, ValueError, KeyError, TypeError):
            continue
    return ResourceVerdict(0, REASON_UNAVAILABLE)
