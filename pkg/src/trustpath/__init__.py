"""Trust-aware multi-hop collaborator selection.

A desk-scale library and CLI covering the full pipeline: direct-trust
extraction from collaboration logs, attention-based propagation of
historical reliability over the trust graph, task-specific resource
gating, and distributed value-maximizing multi-hop path planning with
an exhaustive oracle for honesty checks.
"""

from .collab import (
    ComputeRecord,
    DirectTrustGraph,
    ForwardRecord,
    TrustEdge,
    build_graph,
    direct_trust_ec,
    direct_trust_terminal,
    plr_tfsr,
    read_log,
    write_log,
)
from .config import AppConfig, GenerationConfig, LogConfig, PlanningConfig, load_config
from .errors import (
    ConfigError,
    IngestError,
    ModelError,
    OracleBoundExceededError,
    PlanningError,
    StageError,
    TrainingDivergedError,
    TrustPathError,
)
from .gnn import GNNConfig, TrainedTrustModel, evaluate, filter_topology, train
from .network import (
    Device,
    DeviceKind,
    PathResult,
    RadioEnv,
    Task,
    Topology,
    average_voc,
    computing_time,
    evaluate_path,
    forwarding_fee,
    hop_transfer_time,
    transmission_rate,
    voc,
)
from .pipeline import PipelineRun, run_pipeline
from .planning import (
    AgentState,
    PlanMessage,
    PlanOutcome,
    agent_step,
    brute_force_optimal,
    run_planning,
    select_final,
)
from .resources import (
    EvaluatorEndpoint,
    ResourceProfile,
    ResourceVerdict,
    build_prompt,
    compose_trust,
    evaluate_ec,
    evaluate_terminal,
    external_evaluate,
)
from .scenario import Behavior, Scenario, generate_scenario, load_scenario, save_scenario, synthesize_logs
from .sweeps import SweepSpec, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "AppConfig",
    "Behavior",
    "ComputeRecord",
    "ConfigError",
    "Device",
    "DeviceKind",
    "DirectTrustGraph",
    "EvaluatorEndpoint",
    "ForwardRecord",
    "GNNConfig",
    "GenerationConfig",
    "IngestError",
    "LogConfig",
    "ModelError",
    "OracleBoundExceededError",
    "PathResult",
    "PipelineRun",
    "PlanMessage",
    "PlanOutcome",
    "PlanningConfig",
    "PlanningError",
    "RadioEnv",
    "ResourceProfile",
    "ResourceVerdict",
    "Scenario",
    "StageError",
    "SweepSpec",
    "Task",
    "Topology",
    "TrainedTrustModel",
    "TrainingDivergedError",
    "TrustEdge",
    "TrustPathError",
    "agent_step",
    "average_voc",
    "brute_force_optimal",
    "build_graph",
    "build_prompt",
    "compose_trust",
    "computing_time",
    "direct_trust_ec",
    "direct_trust_terminal",
    "evaluate",
    "evaluate_ec",
    "evaluate_path",
    "evaluate_terminal",
    "external_evaluate",
    "filter_topology",
    "forwarding_fee",
    "generate_scenario",
    "hop_transfer_time",
    "load_config",
    "load_scenario",
    "plr_tfsr",
    "read_log",
    "run_pipeline",
    "run_planning",
    "run_sweep",
    "save_scenario",
    "select_final",
    "synthesize_logs",
    "train",
    "transmission_rate",
    "voc",
    "write_log",
]
