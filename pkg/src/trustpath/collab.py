"""Collaboration-log ingestion and the directed trust graph.

Historical records come in two shapes: per-task forwarding records
between terminals (packet counts) and per-task compute records against
edge-compute devices (binary outcomes). Grouping the records by ordered
device pair yields one weighted edge per pair: the weight is the mean
per-task quality score, the frequency is the raw record count.

Log files are JSON lines, one record per line:

    {"type": "forward", "src": ..., "dst": ..., "packets_total": ...,
     "packets_lost": ..., "packets_received": ..., "packets_forwarded": ...}
    {"type": "compute", "src": ..., "dst": ..., "outcome": 0 or 1}

Malformed lines are reported with their line number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, IngestError
from .network import Device


@dataclass(frozen=True)
class ForwardRecord:
    """One task's forwarding statistics for an ordered terminal pair."""

    src: str
    dst: str
    packets_total: int
    packets_lost: int
    packets_received: int
    packets_forwarded: int

    def __post_init__(self):
        if min(self.packets_total, self.packets_lost,
               self.packets_received, self.packets_forwarded) < 0:
            raise IngestError("negative packet count")
        if self.packets_lost > self.packets_total:
            raise IngestError("packets_lost exceeds packets_total")
        if self.packets_received != self.packets_total - self.packets_lost:
            raise IngestError("packets_received must equal total - lost")
        if self.packets_forwarded > self.packets_received:
            raise IngestError("packets_forwarded exceeds packets_received")


@dataclass(frozen=True)
class ComputeRecord:
    """One task's execution outcome on an edge-compute device."""

    src: str
    dst: str
    outcome: int

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise IngestError("compute outcome must be 0 or 1")


def plr_tfsr(rec: ForwardRecord) -> tuple[float, float]:
    """Packet loss rate and task forwarding success rate of one record.

    With zero received packets the forwarding rate is defined as 0: a
    total loss demonstrates no forwarding ability.
    """
    if rec.packets_total <= 0:
        raise IngestError("packets_total must be > 0")
    plr = rec.packets_lost / rec.packets_total
    tfsr = rec.packets_forwarded / rec.packets_received if rec.packets_received > 0 else 0.0
    return plr, tfsr


def forward_score(rec: ForwardRecord, alpha1: float, alpha2: float) -> float:
    plr, tfsr = plr_tfsr(rec)
    return alpha1 * (1.0 - plr) + alpha2 * tfsr


def _check_alphas(alpha1: float, alpha2: float) -> None:
    if not (0.0 <= alpha1 <= 1.0 and 0.0 <= alpha2 <= 1.0):
        raise ConfigError("alpha weights must lie in [0, 1]")
    if abs(alpha1 + alpha2 - 1.0) > 1e-9:
        raise ConfigError("alpha weights must sum to 1")


def direct_trust_terminal(
    records: Iterable[ForwardRecord], alpha1: float, alpha2: float
) -> float:
    """Mean per-task score alpha1*(1-PLR) + alpha2*TFSR over the records."""
    _check_alphas(alpha1, alpha2)
    recs = list(records)
    if not recs:
        raise IngestError("no records for this pair: edge must be omitted")
    return sum(forward_score(r, alpha1, alpha2) for r in recs) / len(recs)


def direct_trust_ec(records: Iterable[ComputeRecord]) -> float:
    """Mean task outcome over the records."""
    recs = list(records)
    if not recs:
        raise IngestError("no records for this pair: edge must be omitted")
    return sum(r.outcome for r in recs) / len(recs)


@dataclass(frozen=True)
class TrustEdge:
    weight: float
    frequency: int


class DirectTrustGraph:
    """Directed trust graph: one (weight, frequency) edge per observed pair."""

    def __init__(
        self,
        terminals: Iterable[str],
        ecs: Iterable[str],
        edges: Mapping[tuple[str, str], TrustEdge],
    ):
        self.terminals = frozenset(terminals)
        self.ecs = frozenset(ecs)
        overlap = self.terminals & self.ecs
        if overlap:
            raise ConfigError(f"devices listed as both terminal and EC: {sorted(overlap)}")
        self.nodes = self.terminals | self.ecs
        for (src, dst), edge in edges.items():
            if src not in self.nodes or dst not in self.nodes:
                raise ConfigError(f"edge ({src!r}, {dst!r}) references unknown device")
            if not (0.0 <= edge.weight <= 1.0):
                raise ConfigError(f"edge ({src!r}, {dst!r}) weight outside [0, 1]")
            if edge.frequency < 1:
                raise ConfigError(f"edge ({src!r}, {dst!r}) frequency must be >= 1")
        self.edges: dict[tuple[str, str], TrustEdge] = dict(sorted(edges.items()))
        self._out: dict[str, list[str]] = {n: [] for n in sorted(self.nodes)}
        self._in: dict[str, list[str]] = {n: [] for n in sorted(self.nodes)}
        for src, dst in self.edges:
            self._out[src].append(dst)
            self._in[dst].append(src)

    def out_neighbors(self, node: str) -> list[str]:
        return list(self._out[node])

    def in_neighbors(self, node: str) -> list[str]:
        return list(self._in[node])

    def undirected_neighbors(self, node: str) -> list[str]:
        return sorted(set(self._out[node]) | set(self._in[node]))

    def max_frequency(self) -> int:
        if not self.edges:
            return 0
        return max(e.frequency for e in self.edges.values())

    def __len__(self) -> int:
        return len(self.nodes)


def build_graph(
    devices: Iterable[Device],
    forward: Iterable[ForwardRecord],
    compute: Iterable[ComputeRecord],
    alpha1: float = 0.6,
    alpha2: float = 0.4,
) -> DirectTrustGraph:
    """Group records by ordered pair and compute per-edge trust.

    Every scenario device becomes a node even when it appears in no
    record; edges exist only for pairs with at least one record.
    Ingestion is deterministic and order-independent: the result depends
    only on the record multiset.
    """
    _check_alphas(alpha1, alpha2)
    terminals = {d.id for d in devices if not d.is_ec}
    ecs = {d.id for d in devices if d.is_ec}

    fwd_groups: dict[tuple[str, str], list[ForwardRecord]] = {}
    for i, rec in enumerate(forward):
        if rec.src not in terminals:
            raise IngestError(f"forward src {rec.src!r} is not a known terminal", i)
        if rec.dst not in terminals:
            raise IngestError(f"forward dst {rec.dst!r} is not a known terminal", i)
        if rec.src == rec.dst:
            raise IngestError("forward record loops onto its source", i)
        fwd_groups.setdefault((rec.src, rec.dst), []).append(rec)

    cmp_groups: dict[tuple[str, str], list[ComputeRecord]] = {}
    for i, rec in enumerate(compute):
        if rec.src not in terminals:
            raise IngestError(f"compute src {rec.src!r} is not a known terminal", i)
        if rec.dst not in ecs:
            raise IngestError(f"compute dst {rec.dst!r} is not a known EC device", i)
        cmp_groups.setdefault((rec.src, rec.dst), []).append(rec)

    edges: dict[tuple[str, str], TrustEdge] = {}
    for pair, recs in fwd_groups.items():
        edges[pair] = TrustEdge(direct_trust_terminal(recs, alpha1, alpha2), len(recs))
    for pair, recs in cmp_groups.items():
        edges[pair] = TrustEdge(direct_trust_ec(recs), len(recs))
    return DirectTrustGraph(terminals, ecs, edges)


def record_to_dict(rec: ForwardRecord | ComputeRecord) -> dict:
    if isinstance(rec, ForwardRecord):
        return {
            "type": "forward",
            "src": rec.src,
            "dst": rec.dst,
            "packets_total": rec.packets_total,
            "packets_lost": rec.packets_lost,
            "packets_received": rec.packets_received,
            "packets_forwarded": rec.packets_forwarded,
        }
    return {"type": "compute", "src": rec.src, "dst": rec.dst, "outcome": rec.outcome}


def write_log(path: str | Path, records: Iterable[ForwardRecord | ComputeRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec), sort_keys=True) + "\n")


def read_log(path: str | Path) -> tuple[list[ForwardRecord], list[ComputeRecord]]:
    """Parse a JSON-lines collaboration log; errors carry line numbers."""
    forward: list[ForwardRecord] = []
    compute: list[ComputeRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"invalid JSON ({exc.msg})", lineno) from exc
            try:
                kind = obj.pop("type")
                if kind == "forward":
                    forward.append(ForwardRecord(**obj))
                elif kind == "compute":
                    compute.append(ComputeRecord(**obj))
                else:
                    raise IngestError(f"unknown record type {kind!r}", lineno)
            except IngestError:
                raise
            except (KeyError, TypeError) as exc:
                raise IngestError(f"bad record fields: {exc}", lineno) from exc
    return forward, compute
