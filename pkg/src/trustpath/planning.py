"""Distributed value-maximizing path planning plus an exhaustive oracle.

Gated agents exchange best-known path prefixes in synchronized rounds.
A message carries the running value sum, the hop count, and the full
prefix path; the sender's own hop value is computed against the
specific receiver, because a relay's fee covers both its receive and
its send leg. Receivers adopt a prefix only on strict improvement of
the candidate average at their position, which guarantees termination
and reproducibility. Edge-compute devices are sinks: they add their own
compute value on receipt and report candidates back out of band.

The prefix-extension rule is greedy (a mean objective has no optimal
substructure), so ``brute_force_optimal`` enumerates all simple paths
on small instances as the honesty check: the distributed result can
never exceed it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .errors import OracleBoundExceededError, PlanningError
from .network import (
    PathResult,
    RadioEnv,
    Task,
    Topology,
    evaluate_path,
    forwarding_fee,
    hop_transfer_time,
    hop_voc_ec,
    transmission_rate,
    voc,
)

SYNCHRONOUS = "synchronous"
ASYNC = "async"


@dataclass(frozen=True)
class PlanMessage:
    """One prefix advertisement addressed to a specific neighbor."""

    sender: str
    prefix_sum: float
    prefix_hops: int
    prefix_path: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.prefix_path)) != len(self.prefix_path):
            raise PlanningError("message prefix repeats a device")
        if not self.prefix_path or self.prefix_path[-1] != self.sender:
            raise PlanningError("message prefix must end at the sender")

    def sort_key(self):
        return (self.sender, self.prefix_hops, self.prefix_sum, self.prefix_path)


@dataclass(frozen=True)
class AgentState:
    """Per-device planning memory.

    ``best_sum`` counts the value terms of the best-known prefix ending
    here: for a terminal that excludes its own (successor-dependent)
    hop value, for an edge-compute device it includes the compute value.
    """

    device: str
    trusted: bool
    best_avg: float | None = None
    best_sum: float = 0.0
    hop_count: int = 0
    predecessor: str | None = None
    prefix: tuple[str, ...] = ()

    @property
    def visited(self) -> frozenset[str]:
        return frozenset(self.prefix)


@dataclass(frozen=True)
class PlanOutcome:
    """Per-EC candidates, the owner's final choice, and convergence info."""

    candidates: tuple[PathResult, ...]
    final: PathResult | None
    rounds_to_converge: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "format": "trustpath-plan",
            "version": 1,
            "candidates": [c.to_dict() for c in self.candidates],
            "final": self.final.to_dict() if self.final else None,
            "rounds_to_converge": self.rounds_to_converge,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanOutcome":
        return cls(
            candidates=tuple(PathResult.from_dict(c) for c in d["candidates"]),
            final=PathResult.from_dict(d["final"]) if d["final"] else None,
            rounds_to_converge=d["rounds_to_converge"],
            converged=d["converged"],
        )


class PlanContext:
    """Shared read-only planning inputs with cached per-link times."""

    def __init__(self, g_new: Topology, env: RadioEnv, task: Task, gates: Mapping[str, bool]):
        self.topology = g_new
        self.env = env
        self.task = task
        missing = [d for d in g_new.device_ids() if d not in gates]
        if missing:
            raise PlanningError(f"gates missing for devices: {missing}")
        self.gates = {d: bool(gates[d]) for d in g_new.device_ids()}
        self._ttime: dict[tuple[str, str], float] = {}
        self._ec_value: dict[str, float] = {}
        self._trusted_nb: dict[str, tuple[str, ...]] = {}

    def device(self, dev_id: str):
        return self.topology.device(dev_id)

    def transfer_time(self, sender: str, receiver: str) -> float:
        key = (sender, receiver)
        if key not in self._ttime:
            rate = transmission_rate(
                self.device(sender), self.device(receiver).position, self.env
            )
            self._ttime[key] = hop_transfer_time(self.task.size_bits, rate)
        return self._ttime[key]

    def terminal_value(self, pred: str, cur: str, nxt: str) -> float:
        """Hop value of terminal ``cur`` relaying from ``pred`` to ``nxt``."""
        fee = forwarding_fee(
            self.device(cur).price, self.transfer_time(pred, cur), self.transfer_time(cur, nxt)
        )
        return voc(fee, self.task.s_tf_soft, self.task.s_tf_hard)

    def ec_value(self, ec_id: str) -> float:
        if ec_id not in self._ec_value:
            self._ec_value[ec_id] = hop_voc_ec(self.task, self.device(ec_id))[0]
        return self._ec_value[ec_id]

    def trusted_neighbors(self, dev_id: str) -> tuple[str, ...]:
        if dev_id not in self._trusted_nb:
            self._trusted_nb[dev_id] = tuple(
                n for n in self.topology.neighbors(dev_id) if self.gates[n]
            )
        return self._trusted_nb[dev_id]


def agent_step(
    state: AgentState,
    inbox: Iterable[PlanMessage],
    ctx: PlanContext,
    first_round: bool = False,
) -> tuple[AgentState, list[tuple[str, PlanMessage]]]:
    """Pure transition of one agent for one round.

    Processes the inbox in deterministic sender order with
    strict-improvement adoption; emits per-neighbor messages only when
    the state changed this round (or unconditionally for the owner in
    the first round). Messages whose prefix already contains this
    device are discarded silently.
    """
    if not state.trusted:
        return state, []
    device = ctx.device(state.device)
    is_owner = state.device == ctx.task.owner
    st = state
    changed = False
    for msg in sorted(inbox, key=PlanMessage.sort_key):
        if st.device in msg.prefix_path:
            continue
        if device.is_ec:
            cand_sum = msg.prefix_sum + ctx.ec_value(st.device)
            cand_hops = msg.prefix_hops + 1
        else:
            cand_sum = msg.prefix_sum
            cand_hops = msg.prefix_hops
        cand_avg = cand_sum / cand_hops if cand_hops > 0 else 0.0
        if st.best_avg is None or cand_avg > st.best_avg:
            st = replace(
                st,
                best_avg=cand_avg,
                best_sum=cand_sum,
                hop_count=cand_hops,
                predecessor=msg.sender,
                prefix=msg.prefix_path + (st.device,),
            )
            changed = True

    outbox: list[tuple[str, PlanMessage]] = []
    if device.is_ec:
        return st, outbox
    if (changed or (first_round and is_owner)) and st.prefix:
        for neighbor in ctx.trusted_neighbors(st.device):
            if neighbor in st.prefix:
                continue
            if is_owner:
                msg = PlanMessage(st.device, 0.0, 0, st.prefix)
            else:
                own_value = ctx.terminal_value(st.prefix[-2], st.device, neighbor)
                msg = PlanMessage(
                    st.device, st.best_sum + own_value, st.hop_count + 1, st.prefix
                )
            outbox.append((neighbor, msg))
    return st, outbox


def select_final(candidates: Iterable[PathResult]) -> PathResult | None:
    """Highest average value; ties prefer fewer hops, then smaller id sequence."""
    best: PathResult | None = None
    for cand in candidates:
        if best is None:
            best = cand
            continue
        if (-cand.avg_voc, len(cand.hops), cand.hops) < (-best.avg_voc, len(best.hops), best.hops):
            best = cand
    return best


def run_planning(
    g_new: Topology,
    env: RadioEnv,
    task: Task,
    gates: Mapping[str, bool],
    max_rounds: int = 64,
    scheduler: str = SYNCHRONOUS,
    seed: int = 0,
    trace_sink: list | None = None,
) -> PlanOutcome:
    """Drive synchronized rounds until no messages remain or the cap hits.

    The async scheduler (robustness testing only) permutes per-round
    processing order and delays each message by a seeded 0-or-1 extra
    rounds; the synchronous default is fully deterministic without a
    seed. ``rounds_to_converge`` counts rounds that delivered, adopted,
    or emitted something. Passing a list as ``trace_sink`` collects one
    per-round activity record for debugging.
    """
    if task.owner not in g_new:
        raise PlanningError(f"task owner {task.owner!r} not in topology")
    if g_new.device(task.owner).is_ec:
        raise PlanningError("task owner must be a terminal device")
    if scheduler not in (SYNCHRONOUS, ASYNC):
        raise PlanningError(f"unknown scheduler {scheduler!r}")
    if max_rounds < 1:
        raise PlanningError("max_rounds must be >= 1")
    ctx = PlanContext(g_new, env, task, gates)
    rng = np.random.default_rng(seed) if scheduler == ASYNC else None

    states: dict[str, AgentState] = {
        d: AgentState(device=d, trusted=ctx.gates[d]) for d in g_new.device_ids()
    }
    if states[task.owner].trusted:
        states[task.owner] = replace(
            states[task.owner], best_avg=0.0, best_sum=0.0, hop_count=0, prefix=(task.owner,)
        )

    # (deliver_round, recipient, message); sync delivery is always next round
    queue: list[tuple[int, str, PlanMessage]] = []
    order = sorted(g_new.device_ids())
    rounds_active = 0
    converged = False
    for rnd in range(1, max_rounds + 1):
        due = [(rcpt, msg) for when, rcpt, msg in queue if when <= rnd]
        queue = [item for item in queue if item[0] > rnd]
        inboxes: dict[str, list[PlanMessage]] = {}
        for rcpt, msg in due:
            inboxes.setdefault(rcpt, []).append(msg)

        this_order = list(order)
        if rng is not None:
            this_order = [order[i] for i in rng.permutation(len(order))]

        adoptions = 0
        emitted = 0
        for dev_id in this_order:
            st = states[dev_id]
            new_st, outbox = agent_step(st, inboxes.get(dev_id, []), ctx, first_round=(rnd == 1))
            if new_st != st:
                adoptions += 1
            states[dev_id] = new_st
            for recipient, msg in outbox:
                delay = int(rng.integers(0, 2)) if rng is not None else 0
                queue.append((rnd + 1 + delay, recipient, msg))
                emitted += 1
        if trace_sink is not None:
            trace_sink.append(
                {
                    "round": rnd,
                    "delivered": len(due),
                    "adoptions": adoptions,
                    "emitted": emitted,
                }
            )
        if due or adoptions or emitted:
            rounds_active = rnd
        if not queue:
            converged = True
            break

    candidates = []
    for ec_id in sorted(g_new.ecs()):
        st = states[ec_id]
        if st.trusted and st.best_avg is not None:
            candidates.append(evaluate_path(g_new, env, task, st.prefix))
    return PlanOutcome(
        candidates=tuple(candidates),
        final=select_final(candidates),
        rounds_to_converge=rounds_active,
        converged=converged,
    )


def brute_force_optimal(
    g_new: Topology,
    env: RadioEnv,
    task: Task,
    gates: Mapping[str, bool],
    node_bound: int = 12,
) -> PathResult | None:
    """Exact optimum by enumerating every gated simple path to an EC.

    Refuses instances larger than ``node_bound`` devices; raise the
    bound explicitly if a larger exhaustive run is really wanted. Ties
    break exactly as ``select_final`` does.
    """
    if task.owner not in g_new:
        raise PlanningError(f"task owner {task.owner!r} not in topology")
    n_devices = len(g_new.device_ids())
    if n_devices > node_bound:
        raise OracleBoundExceededError(
            f"{n_devices} devices exceed the exhaustive bound of {node_bound}; "
            "pass a larger node_bound to force enumeration"
        )
    ctx = PlanContext(g_new, env, task, gates)
    if not ctx.gates[task.owner]:
        return None

    best: tuple[float, int, tuple[str, ...]] | None = None

    def consider(path: tuple[str, ...], total: float, hops: int) -> None:
        nonlocal best
        key = (-(total / hops), len(path), path)
        if best is None or key < (-best[0], len(best[2]), best[2]):
            best = (total / hops, hops, path)

    def extend(path: list[str], on_path: set[str], partial_sum: float) -> None:
        cur = path[-1]
        for neighbor in ctx.trusted_neighbors(cur):
            if neighbor in on_path:
                continue
            # the current hop's own value becomes defined once its
            # successor is chosen
            step_value = (
                ctx.terminal_value(path[-2], cur, neighbor) if len(path) > 1 else 0.0
            )
            new_sum = partial_sum + step_value
            if ctx.device(neighbor).is_ec:
                total = new_sum + ctx.ec_value(neighbor)
                consider(tuple(path) + (neighbor,), total, len(path))
            else:
                path.append(neighbor)
                on_path.add(neighbor)
                extend(path, on_path, new_sum)
                on_path.remove(neighbor)
                path.pop()

    extend([task.owner], {task.owner}, 0.0)
    if best is None:
        return None
    return evaluate_path(g_new, env, task, best[2])
