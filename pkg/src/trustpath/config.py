"""Declarative configuration: defaults, file loading, and CLI overrides.

One JSON file configures everything; every key has a default, unknown
keys are rejected, and individual values can be overridden from the
command line with ``--set section.key=value`` (values parsed as JSON).
The schema is documented in the README; physical quantities are SI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .gnn.model import GNNConfig
from .network import RadioEnv, Task, megabytes_to_bits
from .resources import EvaluatorEndpoint


@dataclass(frozen=True)
class GenerationConfig:
    """Scenario synthesis parameters: population, arena, prices, profiles."""

    terminals_class_a: int = 10
    terminals_class_b: int = 10
    ec_count: int = 3
    arena_m: float = 120.0
    link_radius_m: float = 60.0
    tx_power_w: float = 0.1
    price_class_a: float = 0.02
    price_class_b: float = 0.01
    price_ec: float = 0.002
    cpu_hz_ec: float = 4e9
    storage_bits_terminal: float = 1.024e12
    storage_bits_ec: float = 3.072e13
    compute_budget_s_ec: float = 1000.0
    plr_range: tuple[float, float] = (0.0, 0.3)
    tfsr_range: tuple[float, float] = (0.7, 1.0)
    ec_success_range: tuple[float, float] = (0.6, 1.0)
    behavior_model: str = "uniform"
    good_fraction: float = 0.5
    unwilling_prob: float = 0.0
    unhealthy_prob: float = 0.0
    owner: str | None = None
    connect_retries: int = 20

    def __post_init__(self):
        for name in ("plr_range", "tfsr_range", "ec_success_range"):
            rng = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, rng)
            if len(rng) != 2 or not (0.0 <= rng[0] <= rng[1] <= 1.0):
                raise ConfigError(f"{name} must be [low, high] within [0, 1]")
        if self.behavior_model not in ("uniform", "clustered"):
            raise ConfigError("behavior_model must be 'uniform' or 'clustered'")
        if not (0.0 <= self.good_fraction <= 1.0):
            raise ConfigError("good_fraction must lie in [0, 1]")
        if self.terminals_class_a + self.terminals_class_b < 1:
            raise ConfigError("need at least one terminal device")
        if self.ec_count < 1:
            raise ConfigError("need at least one edge-compute device")
        if self.arena_m <= 0 or self.link_radius_m <= 0:
            raise ConfigError("arena_m and link_radius_m must be > 0")
        if self.tx_power_w <= 0 or self.cpu_hz_ec <= 0:
            raise ConfigError("tx_power_w and cpu_hz_ec must be > 0")
        if not (0.0 <= self.unwilling_prob <= 1.0 and 0.0 <= self.unhealthy_prob <= 1.0):
            raise ConfigError("profile failure probabilities must lie in [0, 1]")
        if self.connect_retries < 1:
            raise ConfigError("connect_retries must be >= 1")


@dataclass(frozen=True)
class LogConfig:
    tasks_per_pair: int = 50
    packets_per_task: int = 100

    def __post_init__(self):
        if self.tasks_per_pair < 1 or self.packets_per_task < 1:
            raise ConfigError("tasks_per_pair and packets_per_task must be >= 1")


@dataclass(frozen=True)
class PlanningConfig:
    max_rounds: int = 64
    oracle_node_bound: int = 12
    scheduler: str = "synchronous"
    async_seed: int = 0
    oracle: str = "auto"

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if self.oracle_node_bound < 2:
            raise ConfigError("oracle_node_bound must be >= 2")
        if self.scheduler not in ("synchronous", "async"):
            raise ConfigError("scheduler must be 'synchronous' or 'async'")
        if self.oracle not in ("auto", "off", "force"):
            raise ConfigError("oracle must be 'auto', 'off', or 'force'")


DEFAULT_TASKS: dict[str, dict] = {
    "face_recognition": {
        "size_mb": 200.0,
        "density": 2339.0,
        "c_tf": 0.2,
        "c_ec": 0.2,
        "s_tf_soft": 1.0,
        "s_tf_hard": 2.0,
        "s_ec_soft": 2.0,
        "s_ec_hard": 5.0,
    },
    "virus_scanning": {
        "size_mb": 200.0,
        "density": 32946.0,
        "c_tf": 0.2,
        "c_ec": 0.2,
        "s_tf_soft": 1.0,
        "s_tf_hard": 2.0,
        "s_ec_soft": 2.0,
        "s_ec_hard": 5.0,
    },
}

_TASK_KEYS = {
    "size_mb",
    "size_bits",
    "density",
    "c_tf",
    "c_ec",
    "s_tf_soft",
    "s_tf_hard",
    "s_ec_soft",
    "s_ec_hard",
}


def task_from_spec(spec: dict, owner: str) -> Task:
    """Build a Task from a config entry; sizes accept size_mb or size_bits."""
    unknown = set(spec) - _TASK_KEYS
    if unknown:
        raise ConfigError(f"unknown task keys: {sorted(unknown)}")
    d = dict(spec)
    if "size_bits" in d and "size_mb" in d:
        raise ConfigError("give size_bits or size_mb, not both")
    if "size_mb" in d:
        d["size_bits"] = megabytes_to_bits(float(d.pop("size_mb")))
    if "size_bits" not in d:
        raise ConfigError("task needs size_bits or size_mb")
    try:
        return Task(owner=owner, **{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ConfigError(f"incomplete task spec: {exc}") from exc


@dataclass(frozen=True)
class AppConfig:
    radio: RadioEnv = field(default_factory=lambda: RadioEnv(5e6, 1e-11))
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    logs: LogConfig = field(default_factory=LogConfig)
    training: GNNConfig = field(default_factory=GNNConfig)
    planning: PlanningConfig = field(default_factory=PlanningConfig)
    tasks: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_TASKS.items()})
    alpha1: float = 0.6
    alpha2: float = 0.4
    evaluator: EvaluatorEndpoint | None = None

    def task(self, name: str, owner: str) -> Task:
        if name not in self.tasks:
            raise ConfigError(f"unknown task {name!r}; have {sorted(self.tasks)}")
        return task_from_spec(self.tasks[name], owner)


_SECTION_BUILDERS = {
    "radio": lambda d: RadioEnv(**d),
    "generation": lambda d: GenerationConfig(**d),
    "logs": lambda d: LogConfig(**d),
    "training": lambda d: GNNConfig(**{**d, "layer_dims": tuple(d["layer_dims"])} if "layer_dims" in d else d),
    "planning": lambda d: PlanningConfig(**d),
    "evaluator": lambda d: EvaluatorEndpoint(**d) if d else None,
}


def config_from_dict(raw: dict) -> AppConfig:
    """Validate a merged config dict and build the typed sections."""
    known = set(_SECTION_BUILDERS) | {"tasks", "alpha1", "alpha2"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs: dict = {}
    for section, builder in _SECTION_BUILDERS.items():
        if section in raw:
            value = raw[section]
            if value is None and section == "evaluator":
                kwargs["evaluator"] = None
                continue
            if not isinstance(value, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            try:
                kwargs[section] = builder(value)
            except TypeError as exc:
                raise ConfigError(f"bad {section} config: {exc}") from exc
    if "tasks" in raw:
        tasks = {}
        for name, spec in raw["tasks"].items():
            if not isinstance(spec, dict):
                raise ConfigError(f"task {name!r} must be an object")
            merged = dict(DEFAULT_TASKS.get(name, {}))
            merged.update(spec)
            unknown_keys = set(merged) - _TASK_KEYS
            if unknown_keys:
                raise ConfigError(f"task {name!r} has unknown keys {sorted(unknown_keys)}")
            tasks[name] = merged
        base = {k: dict(v) for k, v in DEFAULT_TASKS.items()}
        base.update(tasks)
        kwargs["tasks"] = base
    if "alpha1" in raw:
        kwargs["alpha1"] = float(raw["alpha1"])
    if "alpha2" in raw:
        kwargs["alpha2"] = float(raw["alpha2"])
    return AppConfig(**kwargs)


def load_config(path: str | Path | None = None) -> AppConfig:
    if path is None:
        return AppConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    return config_from_dict(raw)


def apply_overrides(config: AppConfig, assignments: list[str]) -> AppConfig:
    """Apply ``section.key=json_value`` strings on top of a config."""
    if not assignments:
        return config
    raw = _config_to_raw(config)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        dotted, _, text = item.partition("=")
        keys = dotted.strip().split(".")
        if not all(keys):
            raise ConfigError(f"override {item!r} has an empty key component")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text  # bare strings are allowed unquoted
        node = raw
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-object")
        node[keys[-1]] = value
    return config_from_dict(raw)


def _config_to_raw(config: AppConfig) -> dict:
    raw = {
        "radio": {
            "bandwidth_hz": config.radio.bandwidth_hz,
            "noise_watts": config.radio.noise_watts,
        },
        "generation": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in vars(config.generation).items()
        },
        "logs": dict(vars(config.logs)),
        "training": config.training.to_dict(),
        "planning": dict(vars(config.planning)),
        "tasks": {k: dict(v) for k, v in config.tasks.items()},
        "alpha1": config.alpha1,
        "alpha2": config.alpha2,
    }
    if config.evaluator is not None:
        raw["evaluator"] = dict(vars(config.evaluator))
    return raw
