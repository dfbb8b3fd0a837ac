"""In-process byte channels with sampled latency, FIFO links and faults.

Each connection is a pair of FIFO pipes. A frame sent at ``t`` is ready at
``max(t + latency, previous frame's ready time)``, so a stream never
reorders; different connections interleave freely. Losing a frame resets
the connection, the way a stream transport surfaces loss.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from ..runtime import Channel
from .core import Simulator
from .latency import LatencyModel

logger = logging.getLogger(__name__)

NEVER = None


@dataclass(frozen=True)
class Partition:
    """Cuts every link between ``nodes`` and the rest during [start, end)."""

    nodes: frozenset[str]
    start_us: int
    end_us: Optional[int] = None  # None: never heals
    mode: str = "queue"  # "queue" holds frames until heal, "drop" loses them

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        if self.start_us < 0 or (self.end_us is not None and self.end_us < self.start_us):
            raise ValueError("partition window must be non-negative and ordered")
        if self.mode not in ("queue", "drop"):
            raise ValueError(f"unknown partition mode {self.mode!r}")

    def cuts(self, a: str, b: str) -> bool:
        return (a in self.nodes) != (b in self.nodes)

    def active(self, t: int) -> bool:
        return self.start_us <= t and (self.end_us is None or t < self.end_us)


@dataclass(frozen=True)
class FaultPlan:
    crashes: tuple[tuple[str, int], ...] = ()
    partitions: tuple[Partition, ...] = ()
    drop_probability: float = 0.0
    relay_down: tuple[tuple[int, Optional[int]], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "crashes", tuple((str(n), int(t)) for n, t in self.crashes))
        object.__setattr__(self, "partitions", tuple(self.partitions))
        object.__setattr__(self, "relay_down", tuple((int(s), None if e is None else int(e)) for s, e in self.relay_down))
        if any(t < 0 for _, t in self.crashes):
            raise ValueError("crash times must be non-negative")
        if not 0.0 <= self.drop_probability < 1.0:
            raise ValueError("drop probability must be in [0, 1)")

    def to_dict(self) -> dict:
        return {
            "crashes": [list(c) for c in self.crashes],
            "partitions": [
                {"nodes": sorted(p.nodes), "start_us": p.start_us, "end_us": p.end_us, "mode": p.mode}
                for p in self.partitions
            ],
            "drop_probability": self.drop_probability,
            "relay_down": [list(w) for w in self.relay_down],
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "FaultPlan":
        if not d:
            return cls()
        return cls(
            crashes=tuple(tuple(c) for c in d.get("crashes", ())),
            partitions=tuple(Partition(frozenset(p["nodes"]), p["start_us"], p.get("end_us"), p.get("mode", "queue"))
                             for p in d.get("partitions", ())),
            drop_probability=d.get("drop_probability", 0.0),
            relay_down=tuple(tuple(w) for w in d.get("relay_down", ())),
        )


@dataclass
class NodeState:
    name: str
    busy_until: int = 0
    apply_us: int = 0  # fixed cost per delivered frame
    per_op_us: int = 0  # extra cost per operation carried by an update frame


@dataclass
class Counters:
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    stranded: int = 0  # held by a partition that never heals

    def conserved(self) -> bool:
        return self.sent == self.delivered + self.dropped + self.in_flight + self.stranded


class SimChannel:
    """One end of a simulated connection."""

    __slots__ = ("link", "side", "node", "on_data", "on_close", "closed")

    def __init__(self, link: "Link", side: int, node: str) -> None:
        self.link = link
        self.side = side
        self.node = node
        self.on_data: Optional[Callable[[bytes], None]] = None
        self.on_close: Optional[Callable[[], None]] = None
        self.closed = False

    def send(self, data: bytes) -> None:
        if not self.closed:
            self.link.transmit(self.side, bytes(data))

    def close(self) -> None:
        if not self.closed:
            self.closed = True
            self.link.finish(self.side)

    def __repr__(self) -> str:
        return f"SimChannel({self.node}->{self.link.ends[1 - self.side].node}, closed={self.closed})"


class Link:
    def __init__(self, net: "Network", a: str, b: str) -> None:
        self.net = net
        self.lid = net._next_link
        net._next_link += 1
        self.ends = (SimChannel(self, 0, a), SimChannel(self, 1, b))
        self._last_ready = [0, 0]
        self.broken = False

    def _ready_time(self, side: int) -> Optional[int]:
        """Arrival time for a frame sent now from ``side``; None if dropped, -1 if held forever."""
        net = self.net
        src, dst = self.ends[side].node, self.ends[1 - side].node
        t = net.sim.now() + net.latency.sample(net.rng)
        moved = True
        while moved:
            moved = False
            for p in net.partitions:
                if p.cuts(src, dst) and p.active(t):
                    if p.mode == "drop":
                        return None
                    if p.end_us is None:
                        return -1
                    t = p.end_us + net.latency.sample(net.rng)
                    moved = True
        ready = max(t, self._last_ready[side])
        self._last_ready[side] = ready
        return ready

    def transmit(self, side: int, data: bytes) -> None:
        net = self.net
        c = net.counters
        c.sent += 1
        if self.broken:
            c.dropped += 1
            return
        if net.drop_probability and net.rng.random() < net.drop_probability:
            self._lose(side)
            return
        ready = self._ready_time(side)
        if ready is None:
            self._lose(side)
            return
        if ready < 0:
            c.stranded += 1
            return
        c.in_flight += 1
        net.sim.call_at(ready, self._arrive, side, data)
        if net.trace_frames:
            net.sim.record(self.ends[side].node, "frame_sent", link=self.lid, size=len(data), ready=ready)

    def _lose(self, side: int) -> None:
        self.net.counters.dropped += 1
        self.net.sim.record(self.ends[side].node, "frame_dropped", link=self.lid)
        # the loss surfaces as a reset on both ends once the gap is noticed
        self.net.sim.call_later(self.net.latency.sample(self.net.rng), self.reset)

    def reset(self) -> None:
        if self.broken:
            return
        self.broken = True
        for end in self.ends:
            if not end.closed:
                end.closed = True
                if end.on_close is not None:
                    end.on_close()

    def _arrive(self, side: int, data: bytes) -> None:
        net = self.net
        net.counters.in_flight -= 1
        dst = self.ends[1 - side]
        if net.on_arrival is not None:
            net.on_arrival(dst.node, data)
        node = net.node(dst.node)
        finish = max(net.sim.now(), node.busy_until) + node.apply_us
        if node.per_op_us and len(data) >= 14 and data[4] in (3, 4):
            # op count sits right after the frame header, magic and version
            finish += node.per_op_us * int.from_bytes(data[10:14], "little")
        node.busy_until = finish
        if finish > net.sim.now():
            net.sim.call_at(finish, self._deliver, dst, data)
        else:
            self._deliver(dst, data)

    def _deliver(self, dst: SimChannel, data: bytes) -> None:
        c = self.net.counters
        if dst.closed or self.broken or dst.on_data is None:
            c.dropped += 1
            return
        c.delivered += 1
        if self.net.trace_frames:
            self.net.sim.record(dst.node, "frame_delivered", link=self.lid, size=len(data))
        dst.on_data(data)

    def finish(self, side: int) -> None:
        """Orderly close from ``side``: the peer sees it after in-flight frames."""
        if self.broken:
            return
        ready = self._ready_time(side)
        if ready is None or ready < 0:
            # the close notification itself cannot cross; treat as a reset once visible
            self.net.sim.call_later(self.net.latency.sample(self.net.rng), self.reset)
            return
        self.net.sim.call_at(ready, self._fin, 1 - side)

    def _fin(self, side: int) -> None:
        end = self.ends[side]
        if not end.closed:
            end.closed = True
            if end.on_close is not None:
                end.on_close()


class Network:
    def __init__(
        self,
        sim: Simulator,
        latency: LatencyModel,
        rng: random.Random,
        partitions: Iterable[Partition] = (),
        drop_probability: float = 0.0,
        trace_frames: bool = False,
    ) -> None:
        self.sim = sim
        self.latency = latency
        self.rng = rng
        self.partitions: list[Partition] = list(partitions)
        self.drop_probability = drop_probability
        self.trace_frames = trace_frames
        self.counters = Counters()
        self.nodes: dict[str, NodeState] = {}
        self.listeners: dict[str, Callable[[Channel], None]] = {}
        #: observer called with (node, frame bytes) when a frame reaches a node, before processing
        self.on_arrival: Optional[Callable[[str, bytes], None]] = None
        self._next_link = 1

    def node(self, name: str) -> NodeState:
        st = self.nodes.get(name)
        if st is None:
            st = self.nodes[name] = NodeState(name)
        return st

    def add_partition(self, p: Partition) -> None:
        self.partitions.append(p)

    def cut(self, a: str, b: str, t: int) -> bool:
        return any(p.cuts(a, b) and p.active(t) for p in self.partitions)

    def listen(self, name: str, accept: Callable[[Channel], None]) -> None:
        self.node(name)
        self.listeners[name] = accept

    def unlisten(self, name: str) -> None:
        self.listeners.pop(name, None)

    def connector(self, client: str, server: str):
        """A ``Connector`` for ``client`` dialing ``server``; one round trip to establish."""
        self.node(client)

        def connect(done: Callable[[Optional[Channel]], None]) -> None:
            self.sim.call_later(self.latency.sample(self.rng), self._syn, client, server, done)

        return connect

    def _syn(self, client: str, server: str, done: Callable[[Optional[Channel]], None]) -> None:
        back = self.latency.sample(self.rng)
        accept = self.listeners.get(server)
        if accept is None or self.cut(client, server, self.sim.now()):
            self.sim.record(client, "connect_refused", server=server)
            self.sim.call_later(back, done, None)
            return
        link = Link(self, client, server)
        accept(link.ends[1])
        self.sim.record(client, "connected", server=server, link=link.lid)
        self.sim.call_later(back, self._established, link, done)

    def _established(self, link: Link, done: Callable[[Optional[Channel]], None]) -> None:
        end = link.ends[0]
        if link.broken or end.closed:
            done(None)
        else:
            done(end)
