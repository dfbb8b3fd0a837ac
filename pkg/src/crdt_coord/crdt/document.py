"""Replicated document: RGA text, LWW map and append log behind one op stream.

Local edits are applied immediately, queued in an outbox for the sync layer
and returned as an ``UpdatePacket``. Remote packets go through
``apply_update``, which is idempotent and buffers sequence operations whose
causal dependencies have not arrived yet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .applog import AppendLog
from .ids import BEGIN, OpId, StateVector, check_replica_id
from .lww import LwwMap
from .ops import (
    LogAppend,
    MapSet,
    Op,
    Scalar,
    SeqDelete,
    SeqInsert,
    UpdatePacket,
    check_scalar,
    decode_packet_shared,
)
from .sequence import Sequence

LOCAL = "local"
REMOTE = "remote"


@dataclass(frozen=True)
class ChangeEvent:
    """One newly applied operation.

    ``scope`` depends on ``kind``: ``(start, end)`` visible range for text,
    ``(key, field)`` for map writes, the read-order index for log appends.
    """

    origin: str
    kind: str
    scope: tuple
    op_id: OpId


Listener = Callable[[ChangeEvent], None]


class Document:
    def __init__(self, replica: int) -> None:
        self.replica = check_replica_id(replica)
        self.text = Sequence()
        self.todos = LwwMap()
        self.log = AppendLog()
        self._clock = 0
        self._vector: StateVector = {}
        self._seen: set[OpId] = set()
        # replica -> ops in application order
        self._history: dict[int, list[Op]] = {}
        # missing character id -> ops waiting for it
        self._pending: dict[OpId, list[Op]] = {}
        self._pending_count = 0
        self._outbox: list[Op] = []
        self._listeners: list[Listener] = []
        self.remote_ops_applied = 0

    def __repr__(self) -> str:
        return f"Document(replica={self.replica}, clock={self._clock}, text_len={len(self.text)})"

    # -- reads ------------------------------------------------------------

    def text_read(self) -> str:
        return self.text.text()

    def text_length(self) -> int:
        return len(self.text)

    def lww_get(self, key: str, field: str, default: Scalar = None) -> Scalar:
        cell = self.todos.get(key, field)
        return default if cell is None else cell[1]

    def lww_has(self, key: str, field: str) -> bool:
        return self.todos.get(key, field) is not None

    def lww_writer(self, key: str, field: str) -> OpId | None:
        cell = self.todos.get(key, field)
        return None if cell is None else cell[0]

    def map_record(self, key: str) -> dict[str, Scalar] | None:
        return self.todos.record(key)

    def map_keys(self) -> list[str]:
        return sorted(self.todos.entries)

    def map_snapshot(self) -> dict[str, dict[str, Scalar]]:
        return self.todos.snapshot()

    def log_read(self) -> list[str]:
        return self.log.read()

    def state_vector(self) -> StateVector:
        return dict(self._vector)

    @property
    def clock(self) -> int:
        return self._clock

    @property
    def pending_count(self) -> int:
        return self._pending_count

    def has_op(self, oid: OpId) -> bool:
        return oid in self._seen

    # -- listeners --------------------------------------------------------

    def add_listener(self, fn: Listener) -> None:
        self._listeners.append(fn)

    def remove_listener(self, fn: Listener) -> None:
        try:
            self._listeners.remove(fn)
        except ValueError:
            pass

    def _emit(self, events: list[ChangeEvent]) -> None:
        if not events or not self._listeners:
            return
        for ev in events:
            for fn in list(self._listeners):
                fn(ev)

    # -- local edits ------------------------------------------------------

    def _next_id(self, width: int = 1) -> OpId:
        oid = OpId(self._clock + 1, self.replica)
        self._clock += width
        return oid

    def _commit_local(self, ops: list[Op], events: list[ChangeEvent]) -> UpdatePacket:
        self._outbox.extend(ops)
        packet = UpdatePacket(tuple(ops), self.state_vector())
        self._emit(events)
        return packet

    def lww_set(self, key: str, field: str, value: Scalar) -> UpdatePacket:
        return self.lww_set_many(key, [(field, value)])

    def lww_set_many(self, key: str, fields: Iterable[tuple[str, Scalar]]) -> UpdatePacket:
        """Write several fields of one key with consecutive ids in one packet."""
        ops: list[Op] = []
        events: list[ChangeEvent] = []
        for field, value in fields:
            op = MapSet(self._next_id(), key, field, check_scalar(value))
            self._integrate(op)
            ops.append(op)
            events.append(ChangeEvent(LOCAL, "map", (key, field), op.id))
        return self._commit_local(ops, events)

    def text_insert(self, index: int, content: str) -> UpdatePacket:
        if not 0 <= index <= len(self.text):
            raise IndexError(f"insert index {index} outside [0, {len(self.text)}]")
        if not content:
            return UpdatePacket((), self.state_vector())
        origin = self.text.origin_for_index(index)
        op = SeqInsert(self._next_id(len(content)), origin, content)
        start = self._integrate(op)
        ev = ChangeEvent(LOCAL, "text", (start, start + len(content)), op.id)
        return self._commit_local([op], [ev])

    def text_delete(self, index: int, length: int) -> UpdatePacket:
        if length < 0 or index < 0 or index + length > len(self.text):
            raise IndexError(f"delete range [{index}, {index + length}) outside text of length {len(self.text)}")
        if length == 0:
            return UpdatePacket((), self.state_vector())
        return self._delete_ranges(self.text.visible_ranges(index, length))

    def text_ids(self, index: int, length: int) -> list[OpId]:
        """Character ids of visible ``[index, index+length)`` (stable anchors)."""
        if length < 0 or index < 0 or index + length > len(self.text):
            raise IndexError("range outside text")
        return self.text.ids_in_range(index, length)

    def text_index_of(self, cid: OpId) -> int | None:
        return self.text.index_of(cid)

    def text_delete_ids(self, ids: Iterable[OpId]) -> UpdatePacket:
        """Delete whichever of ``ids`` are still visible."""
        ranges: list[list] = []
        for cid in sorted(set(ids), key=lambda c: (c.replica, c.clock)):
            if not self.text.is_visible(cid):
                continue
            if ranges and ranges[-1][0].replica == cid.replica and ranges[-1][0].clock + ranges[-1][1] == cid.clock:
                ranges[-1][1] += 1
            else:
                ranges.append([cid, 1])
        if not ranges:
            return UpdatePacket((), self.state_vector())
        return self._delete_ranges([(s, n) for s, n in ranges])

    def _delete_ranges(self, ranges: list[tuple[OpId, int]]) -> UpdatePacket:
        ops: list[Op] = []
        events: list[ChangeEvent] = []
        for start, n in ranges:
            op = SeqDelete(self._next_id(), start, n)
            hull = self.text.tombstone(start, n)
            self._record(op)
            ops.append(op)
            events.append(ChangeEvent(LOCAL, "text", hull or (0, 0), op.id))
        return self._commit_local(ops, events)

    def log_append(self, payload: str) -> UpdatePacket:
        op = LogAppend(self._next_id(), payload)
        idx = self._integrate(op)
        return self._commit_local([op], [ChangeEvent(LOCAL, "log", (idx,), op.id)])

    # -- outbound ---------------------------------------------------------

    def has_outbox(self) -> bool:
        return bool(self._outbox)

    def take_outbox(self) -> UpdatePacket | None:
        """Pop every local op not yet handed to the sync layer."""
        if not self._outbox:
            return None
        ops, self._outbox = self._outbox, []
        return UpdatePacket(tuple(ops), self.state_vector())

    def clear_outbox(self) -> None:
        self._outbox = []

    def encode_update_since(self, remote: StateVector) -> UpdatePacket:
        """Every known op not covered by ``remote``, in causal (id) order."""
        ops: list[Op] = []
        for replica, hist in self._history.items():
            have = remote.get(replica, 0)
            ops.extend(op for op in hist if op.last_clock > have)
        for waiting in self._pending.values():
            ops.extend(op for op in waiting if op.last_clock > remote.get(op.id.replica, 0))
        ops.sort(key=lambda op: op.id)
        return UpdatePacket(tuple(ops), self.state_vector())

    # -- inbound ----------------------------------------------------------

    def apply_update(self, packet: UpdatePacket | bytes | bytearray | memoryview) -> list[ChangeEvent]:
        """Merge a remote packet; return one event per newly applied op.

        Raises ``DecodeError`` for malformed bytes before touching any state.
        """
        if not isinstance(packet, UpdatePacket):
            packet = decode_packet_shared(bytes(packet))
        events: list[ChangeEvent] = []
        seen = self._seen
        for op in packet.ops:
            if op.id in seen:
                continue
            seen.add(op.id)
            self._apply_remote(op, events)
        self.remote_ops_applied += len(events)
        self._emit(events)
        return events

    def _apply_remote(self, op: Op, events: list[ChangeEvent]) -> None:
        missing = self._missing_dependency(op)
        if missing is not None:
            self._pending.setdefault(missing, []).append(op)
            self._pending_count += 1
            return
        events.append(self._apply_ready(op))
        if self._pending and isinstance(op, SeqInsert):
            self._drain(op, events)

    def _apply_ready(self, op: Op) -> ChangeEvent:
        if op.last_clock > self._clock:
            self._clock = op.last_clock
        if isinstance(op, SeqDelete):
            hull = self.text.tombstone(op.target, op.length)
            self._record(op)
            return ChangeEvent(REMOTE, "text", hull or (0, 0), op.id)
        result = self._integrate(op)
        if isinstance(op, SeqInsert):
            return ChangeEvent(REMOTE, "text", (result, result + len(op.content)), op.id)
        if isinstance(op, MapSet):
            return ChangeEvent(REMOTE, "map", (op.key, op.field), op.id)
        return ChangeEvent(REMOTE, "log", (result,), op.id)

    def _drain(self, inserted: SeqInsert, events: list[ChangeEvent]) -> None:
        ready = [inserted]
        while ready and self._pending:
            ins = ready.pop()
            base = ins.id
            for k in range(len(ins.content)):
                waiting = self._pending.pop(OpId(base.clock + k, base.replica), None)
                if not waiting:
                    continue
                self._pending_count -= len(waiting)
                for op in waiting:
                    missing = self._missing_dependency(op)
                    if missing is not None:
                        self._pending.setdefault(missing, []).append(op)
                        self._pending_count += 1
                        continue
                    events.append(self._apply_ready(op))
                    if isinstance(op, SeqInsert):
                        ready.append(op)

    def _missing_dependency(self, op: Op) -> OpId | None:
        if isinstance(op, SeqInsert):
            if op.origin == BEGIN or self.text.has_char(op.origin):
                return None
            return op.origin
        if isinstance(op, SeqDelete):
            return self.text.has_range(op.target, op.length)
        return None

    def _integrate(self, op: Op) -> int:
        self._record(op)
        if isinstance(op, MapSet):
            self.todos.apply(op.id, op.key, op.field, op.value)
            return 0
        if isinstance(op, SeqInsert):
            return self.text.integrate(op.id.clock, op.id.replica, op.origin, op.content)
        if isinstance(op, LogAppend):
            return self.log.insert(op.id, op.payload)
        raise TypeError(op)

    def _record(self, op: Op) -> None:
        self._seen.add(op.id)
        self._history.setdefault(op.id.replica, []).append(op)
        last = op.last_clock
        if last > self._vector.get(op.id.replica, 0):
            self._vector[op.id.replica] = last


def new_replica(replica: int) -> Document:
    return Document(replica)


def converged(a: Document, b: Document) -> bool:
    """Visible text, map values and log order are identical."""
    return (
        a.text_read() == b.text_read()
        and a.map_snapshot() == b.map_snapshot()
        and a.log_read() == b.log_read()
    )
