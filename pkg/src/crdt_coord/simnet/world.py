"""A relay plus replica nodes wired over the simulated network.

Each node owns a document, a client session and optionally an actor. The
actor starts once the session first goes live; after every actor step the
session flushes the document outbox, and every remote change wakes the
actor.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Generator, Optional

from ..actor import Actor
from ..crdt.document import ChangeEvent, Document, converged
from ..runtime import Channel
from ..sync.client import ClientSession, SessionConfig
from ..sync.observe import REMOTE_ONLY, Subscription, subscribe
from ..sync.relay import Relay
from ..sync.store import MemoryStore
from .core import Simulator
from .latency import LatencyModel
from .network import FaultPlan, Network, Partition
from .trace import SimTrace

logger = logging.getLogger(__name__)

RELAY = "relay"

BodyFactory = Callable[["SimNode"], Generator]


class ConfigError(ValueError):
    pass


@dataclass
class SimNode:
    name: str
    replica: int
    doc: Document
    session: ClientSession
    world: "SimWorld"
    actor: Optional[Actor] = None
    body: Optional[BodyFactory] = None
    subscription: Optional[Subscription] = None
    on_remote: Optional[Callable[[ChangeEvent], None]] = None
    crashed: bool = False
    crashed_at: Optional[int] = None
    state: dict = field(default_factory=dict)

    def now(self) -> int:
        return self.world.sim.now()

    def record(self, event: str, **detail) -> None:
        self.world.sim.record(self.name, event, **detail)

    @property
    def callbacks(self) -> int:
        return self.subscription.calls if self.subscription is not None else 0


class RelayHost:
    """Keeps the relay's store across down/up windows."""

    def __init__(self, world: "SimWorld", doc_id: str) -> None:
        self.world = world
        self.doc_id = doc_id
        self.store = MemoryStore()
        self.relay: Relay | None = None
        self.restarts = 0

    def up(self) -> None:
        if self.relay is not None:
            return
        sim = self.world.sim
        self.relay = Relay(self.doc_id, self.store, on_event=lambda name, d: sim.record(RELAY, name, **d))
        self.world.net.listen(RELAY, self._accept)
        sim.record(RELAY, "relay_up", restarts=self.restarts)

    def down(self) -> None:
        if self.relay is None:
            return
        self.world.net.unlisten(RELAY)
        relay, self.relay = self.relay, None
        for sess in list(relay.sessions.values()):
            relay.close_session(sess, "relay down")
        self.restarts += 1
        self.world.sim.record(RELAY, "relay_down")

    def _accept(self, channel: Channel) -> None:
        if self.relay is not None:
            self.relay.attach(channel)
        else:
            channel.close()


class SimWorld:
    def __init__(
        self,
        seed: int = 0,
        latency: LatencyModel | None = None,
        faults: FaultPlan | None = None,
        *,
        apply_us: int = 0,
        per_op_us: int = 0,
        session_config: SessionConfig | None = None,
        doc_id: str = "sim",
        trace: bool = True,
        trace_frames: bool = False,
        header: dict | None = None,
    ) -> None:
        self.seed = seed
        self.sim = Simulator(SimTrace(header=dict(header or {}), enabled=trace))
        self.rng = random.Random(seed)
        self.net = Network(self.sim, latency or LatencyModel(), random.Random(self.rng.getrandbits(64)),
                           drop_probability=(faults.drop_probability if faults else 0.0), trace_frames=trace_frames)
        self.faults = faults or FaultPlan()
        self.session_config = session_config or SessionConfig()
        self.apply_us = apply_us
        self.per_op_us = per_op_us
        self.nodes: dict[str, SimNode] = {}
        self.relay_host = RelayHost(self, doc_id)
        self.doc_id = doc_id
        n = self.net.node(RELAY)
        n.apply_us, n.per_op_us = apply_us, per_op_us
        self._started = False

    @property
    def relay(self) -> Relay | None:
        return self.relay_host.relay

    def rng_for(self, name: str) -> random.Random:
        """Independent stream per consumer, stable under unrelated config changes."""
        return random.Random(f"{self.seed}:{name}")

    def add_node(self, name: str, replica: int, body: BodyFactory | None = None, doc: Document | None = None) -> SimNode:
        if name in self.nodes or name == RELAY:
            raise ConfigError(f"duplicate node name {name!r}")
        doc = doc if doc is not None else Document(replica)
        session = ClientSession(
            doc,
            self.net.connector(name, RELAY),
            self.sim,
            self.doc_id,
            self.session_config,
            on_state=lambda st, t, n=name: self._session_state(n, st),
        )
        node = SimNode(name, replica, doc, session, self, body=body)
        node.subscription = subscribe(doc, REMOTE_ONLY, lambda ev, nd=node: self._remote_event(nd, ev))
        st = self.net.node(name)
        st.apply_us, st.per_op_us = self.apply_us, self.per_op_us
        self.nodes[name] = node
        return node

    def _session_state(self, name: str, state: str) -> None:
        node = self.nodes[name]
        self.sim.record(name, "session", state=state, attempt=node.session.attempts)
        if state == ClientSession.LIVE and node.body is not None and node.actor is None and not node.crashed:
            node.actor = Actor(
                name,
                node.body(node),
                self.sim,
                after_step=node.session.broadcast_local,
                request_ack=lambda nd=node: nd.session.ping(lambda ok, a=nd: a.actor.ack(ok) if a.actor else None),
            )
            node.actor.start()

    def _remote_event(self, node: SimNode, ev: ChangeEvent) -> None:
        if node.crashed:
            return
        if node.on_remote is not None:
            node.on_remote(ev)
        if node.actor is not None:
            node.actor.notify()

    # -- faults ---------------------------------------------------------------

    def inject_crash(self, name: str, time_us: int) -> None:
        if name not in self.nodes:
            raise ConfigError(f"unknown agent {name!r}")
        self.sim.call_at(time_us, self._crash, name)

    def _crash(self, name: str) -> None:
        node = self.nodes[name]
        if node.crashed:
            return
        node.crashed = True
        node.crashed_at = self.sim.now()
        if node.actor is not None:
            node.actor.kill()
        node.session.close()
        self.sim.record(name, "crash")

    def partition(self, nodes, start_us: int, end_us: int | None, mode: str = "queue") -> Partition:
        nodes = frozenset(nodes)
        unknown = nodes - set(self.nodes) - {RELAY}
        if unknown:
            raise ConfigError(f"unknown nodes in partition: {sorted(unknown)}")
        p = Partition(nodes, start_us, end_us, mode)
        self.net.add_partition(p)
        return p

    # -- running ----------------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for name, t in self.faults.crashes:
            self.inject_crash(name, t)
        for p in self.faults.partitions:
            self.partition(p.nodes, p.start_us, p.end_us, p.mode)
        self.relay_host.up()
        for start, end in self.faults.relay_down:
            self.sim.call_at(start, self.relay_host.down)
            if end is not None:
                self.sim.call_at(end, self.relay_host.up)
        for node in self.nodes.values():
            node.session.start()

    def run(self, until_us: int | None = None, stop: Callable[[], bool] | None = None) -> SimTrace:
        self.start()
        finished = self.sim.run(until_us, stop)
        self.sim.trace.quiescent = finished
        return self.sim.trace

    def live_nodes(self) -> list[SimNode]:
        return [n for n in self.nodes.values() if not n.crashed]

    def converged(self, include_relay: bool = True) -> bool:
        docs = [n.doc for n in self.live_nodes()]
        if include_relay and self.relay is not None:
            docs.append(self.relay.doc)
        return all(converged(docs[0], d) for d in docs[1:]) if docs else True

    def callbacks(self) -> int:
        return sum(n.callbacks for n in self.nodes.values())
