"""Seeded property runs behind the acceptance checks.

Each function runs one seeded scenario in the simulator and returns a small
result object; callers loop over seeds and aggregate.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .. import claims
from ..actor import Sleep, WaitEvent
from ..agents.script import TaskScript, synthetic_script
from ..claims import ProtocolConfig
from ..crdt.document import REMOTE, Document
from ..crdt.ops import DecodeError, decode_packet
from ..crdt.ids import OpId
from ..runtime import US_PER_S
from ..simnet.latency import LatencyModel
from ..simnet.network import FaultPlan
from ..simnet.world import RELAY, SimNode, SimWorld
from ..sync.frames import FrameType
from ..sync.observe import REMOTE_ONLY, subscribe
from .experiment import ExperimentConfig, run_once


# -- claim races ------------------------------------------------------------------


@dataclass
class RaceResult:
    seed: int
    agents: int
    todos: int
    converged: bool
    violations: list[str]
    transient_double_won: int
    claims: int
    lost: int
    max_latency_us: int
    sync_delay_us: int


def _seed_doc(keys: list[str]) -> bytes:
    doc = Document(0xFFFF)
    claims.publish_todos(doc, [(k, f"task {k}") for k in keys])
    return doc.encode_update_since({}).encode()


def claim_race(seed: int, *, verify_mode: str = "delay") -> RaceResult:
    """Agents race to claim a shared set of items; check the converged map against an oracle.

    The oracle: each item's converged record must carry the largest claim
    write (by operation id) that any agent issued for it, and among agents
    told Won at most one can be that writer.
    """
    rng = random.Random(seed)
    n_agents = rng.randint(2, 10)
    n_todos = rng.randint(1, 20)
    p95_ms = rng.choice([10, 50, 100, 150, 200])
    median_ms = max(1, p95_ms // 4)
    latency = LatencyModel(median_ms * 1000, p95_ms * 1000)
    proto = ProtocolConfig(verify_mode=verify_mode)
    keys = [f"t{i:02d}" for i in range(n_todos)]
    seed_packet = _seed_doc(keys)

    world = SimWorld(seed, latency, trace=False)
    world.relay_host.store.append(seed_packet)
    writes: dict[str, list[OpId]] = defaultdict(list)
    won: dict[str, set[int]] = defaultdict(set)
    counts = {"claims": 0, "lost": 0}

    def body(node: SimNode):
        doc = node.doc
        yield Sleep(rng_for_start[node.name])
        while True:
            pending = claims.scan_pending(doc)
            if not pending:
                return
            key = pending[0] if rng_order[node.name] == 0 else pending[-1]
            before = doc.clock
            outcome = yield from claims.claim(doc, key, proto, node.now())
            counts["claims"] += 1
            if doc.clock > before:
                writes[key].append(OpId(before + 1, doc.replica))
            if outcome.won:
                won[key].add(doc.replica)
            else:
                counts["lost"] += 1
                # give remote news a chance before trying the next item
                yield WaitEvent(node.now() + proto.sync_delay_us)

    rng_for_start = {}
    rng_order = {}
    for i in range(n_agents):
        name = f"a{i}"
        rng_for_start[name] = rng.randint(0, 30_000)
        rng_order[name] = rng.randint(0, 1)
        doc = Document(i + 1)
        doc.apply_update(seed_packet)
        world.add_node(name, i + 1, body, doc=doc)
    world.run(until_us=600 * US_PER_S)

    violations: list[str] = []
    conv = world.sim.trace.quiescent and world.converged()
    if not conv:
        violations.append("replicas did not converge")
    ref = world.relay.doc if world.relay is not None else next(iter(world.nodes.values())).doc
    for key in keys:
        rec = claims.read_record(ref, key)
        if not writes[key]:
            continue
        top = max(writes[key])
        if rec.assigned_to != top.replica or rec.logical_clock != top.clock:
            violations.append(f"{key}: converged writer {rec.assigned_to}@{rec.logical_clock} != oracle {top}")
        owners = [r for r in won[key] if r == rec.assigned_to]
        if len(owners) > 1:
            violations.append(f"{key}: {len(owners)} Won agents share the converged assignment")
        selves = [n for n in world.nodes.values() if claims.read_record(n.doc, key).assigned_to == n.replica]
        if len(selves) > 1:
            violations.append(f"{key}: {len(selves)} agents read themselves after convergence")
    return RaceResult(
        seed=seed,
        agents=n_agents,
        todos=n_todos,
        converged=conv,
        violations=violations,
        transient_double_won=sum(1 for v in won.values() if len(v) > 1),
        claims=counts["claims"],
        lost=counts["lost"],
        max_latency_us=latency.p95_us,
        sync_delay_us=proto.sync_delay_us,
    )


# -- liveness under crashes ---------------------------------------------------------


@dataclass
class LivenessResult:
    seed: int
    agents: int
    todos: int
    crashed: list[str]
    all_done: bool
    done_at_us: Optional[int]
    bound_us: int
    budget_us: int

    @property
    def ok(self) -> bool:
        return self.all_done and self.done_at_us is not None and self.done_at_us <= self.bound_us


def generation_budget_us(script: TaskScript, config: ExperimentConfig) -> int:
    """Outline time, every item's generation plus one claim verify delay, and the evaluator scan."""
    proto = config.protocol()
    per_item = sum(t.duration_ms * 1000 + proto.sync_delay_us for t in script.todos)
    return script.outline_ms * 1000 + per_item + int(config.evaluator_scan_ms * 1000)


def liveness_run(seed: int, crash_probability: float = 0.3) -> LivenessResult:
    rng = random.Random(seed)
    n_agents = rng.randint(2, 5)
    script = synthetic_script(rng, rng.randint(1, 8), coupling=rng.choice([0.0, 0.5]))
    config = ExperimentConfig(mode="parallel", agents=n_agents, runs=1, time_cap_s=3600)
    budget = generation_budget_us(script, config)
    names = [f"impl-{i + 1}" for i in range(n_agents)]
    crashed = [n for n in names if rng.random() < crash_probability]
    if len(crashed) == len(names):
        crashed.remove(rng.choice(crashed))  # keep at least one survivor
    crashes = tuple((n, rng.randint(0, budget)) for n in crashed)
    result = run_once(config, seed, script, faults=FaultPlan(crashes=crashes))
    ev_doc = result.world.nodes["evaluator"].doc
    all_done = claims.completion_count(ev_doc) == len(script.todos)
    # the evaluator replica reaching full completion marks the end of the work
    done_at = result.states["evaluator"].ready_at if all_done else None
    return LivenessResult(
        seed=seed,
        agents=n_agents,
        todos=len(script.todos),
        crashed=crashed,
        all_done=all_done,
        done_at_us=done_at,
        bound_us=budget + 2 * config.protocol().stale_timeout_us,
        budget_us=budget,
    )


# -- convergence latency under bursts -----------------------------------------------


@dataclass
class BurstSample:
    start_us: int
    last_delivery_us: int
    converged_us: int

    @property
    def lag_us(self) -> int:
        """Convergence minus the arrival of the last frame that carried burst ops."""
        return self.converged_us - self.last_delivery_us

    @property
    def span_us(self) -> int:
        return self.converged_us - self.start_us


@dataclass
class BurstRun:
    samples: list[BurstSample] = field(default_factory=list)
    unconverged: int = 0
    final_converged: bool = True


def burst_latency(seed: int, bursts: int = 100, agents: int = 5, gap_us: int = 3 * US_PER_S,
                  ops_per_agent: tuple[int, int] = (1, 4), apply_us: int = 1000, per_op_us: int = 100) -> BurstRun:
    """``bursts`` rounds in which every agent edits at once; time until every replica has every edit.

    A frame "arrives" when it reaches a node; it is applied after that
    node's serialized processing cost. The burst's last delivery is the
    latest arrival of any frame carrying one of its ops.
    """
    rng = random.Random(seed)
    world = SimWorld(seed, LatencyModel(), apply_us=apply_us, per_op_us=per_op_us, trace=False)
    burst_ops: dict[OpId, int] = {}  # op id -> burst index
    n_replicas = agents + 1  # agents plus the relay

    def watch(doc: Document):
        def on_event(ev):
            if ev.origin != REMOTE:
                return
            b = burst_ops.get(ev.op_id)
            if b is None:
                return
            seen[b] += 1
            if seen[b] == need[b] and done[b] is None:
                done[b] = world.sim.now()
        doc.add_listener(on_event)

    def body(node: SimNode):
        doc = node.doc
        for b in range(bursts):
            target = starts[b] + jitter[node.name][b]
            if target > node.now():
                yield Sleep(target - node.now())
            for _ in range(counts[node.name][b]):
                kind = rng.random()
                if kind < 0.6:
                    pkt = doc.text_insert(rng.randint(0, doc.text_length()), rng.choice(["a", "bc", "def"]))
                elif kind < 0.9:
                    pkt = doc.lww_set(f"k{rng.randint(0, 5)}", "v", rng.randint(0, 99))
                else:
                    pkt = doc.log_append(f"{node.name}:{b}")
                for op in pkt.ops:
                    burst_ops[op.id] = b
                need[b] += len(pkt.ops) * n_replicas
                seen[b] += len(pkt.ops)  # the local replica has them already
            yield Sleep(1)

    def on_arrival(node: str, data: bytes) -> None:
        if len(data) <= 5 or data[4] not in (FrameType.SYNC_RESP, FrameType.UPDATE):
            return
        try:
            pkt = decode_packet(data[5:])
        except DecodeError:
            return
        now = world.sim.now()
        for op in pkt.ops:
            b = burst_ops.get(op.id)
            if b is not None and now > last_arrival[b]:
                last_arrival[b] = now

    jitter: dict[str, list[int]] = {}
    counts: dict[str, list[int]] = {}
    t0 = 5 * US_PER_S
    starts = [t0 + b * gap_us for b in range(bursts)]
    seen = [0] * bursts
    need = [0] * bursts
    last_arrival = [0] * bursts
    done: list[Optional[int]] = [None] * bursts
    for i in range(agents):
        name = f"a{i}"
        jitter[name] = [rng.randint(0, 20_000) for _ in range(bursts)]
        counts[name] = [rng.randint(*ops_per_agent) for _ in range(bursts)]
        node = world.add_node(name, i + 1, body)
        watch(node.doc)
    world.net.on_arrival = on_arrival
    world.start()
    watch(world.relay.doc)
    world.run(until_us=t0 + bursts * gap_us + 60 * US_PER_S)
    out = BurstRun()
    for b in range(bursts):
        if need[b] == 0:
            continue
        if done[b] is None:
            out.unconverged += 1
            continue
        out.samples.append(BurstSample(starts[b], last_arrival[b], done[b]))
    out.final_converged = world.relay is not None and world.converged()
    return out


# -- observation overhead -------------------------------------------------------------


@dataclass
class ObservationResult:
    seed: int
    subscribers: int
    remote_ops: int  # distinct ops each observer applied
    callbacks: int
    per_doc_ok: bool

    @property
    def expected(self) -> int:
        return self.subscribers * self.remote_ops


def observation_run(seed: int, subscribers: int, *, shared_doc: bool = False) -> ObservationResult:
    """A writer emits U ops; N subscribers watch. Callbacks must total N x U.

    With ``shared_doc`` all N subscriptions sit on one observing replica;
    otherwise each subscriber is its own replica with one subscription.
    Reconnects are injected so some ops cross the wire twice.
    """
    rng = random.Random(seed)
    world = SimWorld(seed, LatencyModel(), trace=False)
    produced: set[OpId] = set()

    def writer(node: SimNode):
        doc = node.doc
        for _ in range(rng.randint(5, 30)):
            r = rng.random()
            if r < 0.5 or doc.text_length() == 0:
                pkt = doc.text_insert(rng.randint(0, doc.text_length()), rng.choice(["x", "yz", "uvw"]))
            elif r < 0.7:
                pkt = doc.text_delete(rng.randrange(doc.text_length()), 1)
            elif r < 0.9:
                pkt = doc.lww_set(f"k{rng.randint(0, 3)}", "f", rng.randint(0, 9))
            else:
                pkt = doc.log_append("entry")
            produced.update(op.id for op in pkt.ops)
            if rng.random() < 0.1:
                node.session.disconnect()
            yield Sleep(rng.randint(1_000, 200_000))

    world.add_node("writer", 1, writer)
    observers = []
    counts = []
    if shared_doc:
        obs = world.add_node("observer", 2)
        observers.append(obs)
        for _ in range(subscribers):
            c = [0]
            subscribe(obs.doc, REMOTE_ONLY, lambda ev, c=c: c.__setitem__(0, c[0] + 1))
            counts.append(c)
    else:
        for i in range(subscribers):
            obs = world.add_node(f"observer-{i}", 2 + i)
            observers.append(obs)
            c = [0]
            obs.subscription.unsubscribe()
            obs.subscription = subscribe(obs.doc, REMOTE_ONLY, lambda ev, c=c: c.__setitem__(0, c[0] + 1))
            counts.append(c)
    for obs in observers:
        if rng.random() < 0.5:
            t = rng.randint(100_000, 3 * US_PER_S)
            world.sim.call_at(t, obs.session.disconnect)
    world.run(until_us=600 * US_PER_S)
    u = len(produced)
    per_doc_ok = all(o.doc.remote_ops_applied == u for o in observers) and world.converged()
    return ObservationResult(seed, subscribers, u, sum(c[0] for c in counts), per_doc_ok)


# -- sequential equivalence -------------------------------------------------------------


@dataclass
class EquivalenceResult:
    seed: int
    script: str
    reference_ok: bool
    sequential_ok: bool
    parallel_ok: bool
    converged: bool

    @property
    def ok(self) -> bool:
        return self.reference_ok and self.sequential_ok and self.parallel_ok and self.converged


def equivalence_run(seed: int, script: TaskScript | None = None) -> EquivalenceResult:
    rng = random.Random(seed)
    if script is None:
        script = synthetic_script(rng, rng.randint(1, 10), coupling=0.0, name=f"indep-{seed}")
    agents = rng.randint(2, 5)
    seq = run_once(ExperimentConfig(mode="sequential", agents=1, runs=1), seed, script)
    par = run_once(ExperimentConfig(mode="parallel", agents=agents, runs=1), seed, script)
    ref = _replace_markers(script)
    return EquivalenceResult(
        seed=seed,
        script=script.name,
        reference_ok=True,
        sequential_ok=seq.text() == ref,
        parallel_ok=par.text() == seq.text(),
        converged=seq.record.converged and par.record.converged,
    )


def _replace_markers(script: TaskScript) -> str:
    """Independent oracle: plain string replacement, one marker at a time."""
    text = script.skeleton
    for t in script.todos:
        marker = f"// TODO({t.key}): {t.description}"
        i = text.index(marker)
        text = text[:i] + t.body + text[i + len(marker):]
    return text


__all__ = [
    "RELAY",
    "BurstRun",
    "BurstSample",
    "EquivalenceResult",
    "LivenessResult",
    "ObservationResult",
    "RaceResult",
    "burst_latency",
    "claim_race",
    "equivalence_run",
    "generation_budget_us",
    "liveness_run",
    "observation_run",
]
