"""Optimistic write-then-verify claiming of work items over the replicated map.

Each work item lives at map key ``todo:<key>`` with the fields listed in
``FIELDS``. Every write here rewrites the whole record in one packet with
consecutive operation ids, so on every replica all fields of a record come
from the same logical write and a reader never sees a torn record.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Generator, Iterable, Optional

from .actor import Sleep, WaitAck
from .crdt.document import Document
from .runtime import US_PER_S

TODO_PREFIX = "todo:"

PENDING = "pending"
CLAIMED = "claimed"
DONE = "done"
STATUSES = (PENDING, CLAIMED, DONE)

FIELDS = ("description", "status", "assignedTo", "logicalClock", "claimedAt")

_I64_MAX = 2**63 - 1


class ClaimError(Exception):
    """A protocol precondition failed (duplicate key, not the owner, unknown key)."""


@dataclass(frozen=True)
class ProtocolConfig:
    sync_delay_us: int = 50_000
    stale_timeout_us: int = 120 * US_PER_S
    #: claim attempts per scan pass before an agent waits for news; 0 means unbounded
    max_retries: int = 0
    verify_mode: str = "delay"  # "delay" or "ack"

    def __post_init__(self) -> None:
        if self.sync_delay_us <= 0:
            raise ValueError("sync delay must be positive")
        if self.stale_timeout_us <= self.sync_delay_us:
            raise ValueError("stale timeout must exceed the sync delay")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.verify_mode not in ("delay", "ack"):
            raise ValueError(f"unknown verify mode {self.verify_mode!r}")


@dataclass(frozen=True)
class TodoRecord:
    key: str
    description: str
    status: str
    assigned_to: Optional[int]
    logical_clock: int
    claimed_at: Optional[int]


@dataclass(frozen=True)
class ClaimOutcome:
    kind: str  # "won", "lost" or "invalid"
    winner: Optional[int] = None
    reason: Optional[str] = None

    @property
    def won(self) -> bool:
        return self.kind == "won"

    def __str__(self) -> str:
        if self.kind == "won":
            return "Won"
        if self.kind == "lost":
            return f"Lost({self.winner})"
        return f"Invalid({self.reason})"


def Won() -> ClaimOutcome:  # noqa: N802 - reads like the enum variant it stands for
    return ClaimOutcome("won")


def Lost(winner: Optional[int]) -> ClaimOutcome:  # noqa: N802
    return ClaimOutcome("lost", winner=winner)


def Invalid(reason: str) -> ClaimOutcome:  # noqa: N802
    return ClaimOutcome("invalid", reason=reason)


def map_key(key: str) -> str:
    return TODO_PREFIX + key


def read_record(doc: Document, key: str) -> TodoRecord | None:
    rec = doc.map_record(map_key(key))
    if rec is None or "status" not in rec:
        return None
    return TodoRecord(
        key=key,
        description=rec.get("description") or "",
        status=rec["status"],
        assigned_to=rec.get("assignedTo"),
        logical_clock=rec.get("logicalClock") or 0,
        claimed_at=rec.get("claimedAt"),
    )


def todo_keys(doc: Document) -> list[str]:
    n = len(TODO_PREFIX)
    return sorted(k[n:] for k in doc.map_keys() if k.startswith(TODO_PREFIX))


def all_records(doc: Document) -> list[TodoRecord]:
    return [r for r in (read_record(doc, k) for k in todo_keys(doc)) if r is not None]


def write_record(doc: Document, key: str, description: str, status: str, assigned: Optional[int], claimed_at: Optional[int]):
    clock = doc.clock + 1  # id of the first op in the packet
    values = (description, status, assigned, clock, claimed_at)
    return doc.lww_set_many(map_key(key), zip(FIELDS, values))


# -- operations -----------------------------------------------------------------


def publish_todos(doc: Document, todos: Iterable[tuple[str, str]]) -> None:
    todos = list(todos)
    seen: set[str] = set()
    for key, _ in todos:
        if not isinstance(key, str) or not key:
            raise ClaimError(f"invalid todo key {key!r}")
        if key in seen or read_record(doc, key) is not None:
            raise ClaimError(f"duplicate todo key {key!r}")
        seen.add(key)
    for key, description in todos:
        write_record(doc, key, description, PENDING, None, None)


def scan_pending(doc: Document) -> list[str]:
    return [r.key for r in all_records(doc) if r.status == PENDING and r.assigned_to is None]


def completion_count(doc: Document) -> int:
    return sum(1 for r in all_records(doc) if r.status == DONE)


def claim(doc: Document, key: str, config: ProtocolConfig, now: int) -> Generator[object, object, ClaimOutcome]:
    """Write self as assignee, let the write propagate, then re-read.

    This is an actor sub-generator: drive it with ``yield from``.
    """
    rec = read_record(doc, key)
    if rec is None:
        return Invalid("unknown")
    if rec.status == DONE:
        return Invalid("done")
    if rec.status != PENDING or rec.assigned_to is not None:
        return Lost(rec.assigned_to)
    if doc.replica > _I64_MAX:
        raise ClaimError("replica id does not fit the assignedTo field")
    write_record(doc, key, rec.description, CLAIMED, doc.replica, now)
    if config.verify_mode == "ack":
        acked = yield WaitAck()
        if not acked:
            yield Sleep(config.sync_delay_us)
    else:
        yield Sleep(config.sync_delay_us)
    after = read_record(doc, key)
    if after is not None and after.status == CLAIMED and after.assigned_to == doc.replica:
        return Won()
    return Lost(after.assigned_to if after is not None else None)


def holds_claim(doc: Document, key: str) -> bool:
    rec = read_record(doc, key)
    return rec is not None and rec.status == CLAIMED and rec.assigned_to == doc.replica


def mark_done(doc: Document, key: str) -> bool:
    """Mark an owned item done. Returns False when it already was (no write)."""
    rec = read_record(doc, key)
    if rec is None:
        raise ClaimError(f"unknown todo {key!r}")
    if rec.assigned_to != doc.replica:
        raise ClaimError(f"replica {doc.replica} does not hold {key!r} (assigned to {rec.assigned_to})")
    if rec.status == DONE:
        return False
    if rec.status != CLAIMED:
        raise ClaimError(f"{key!r} is {rec.status}, not claimed")
    write_record(doc, key, rec.description, DONE, rec.assigned_to, rec.claimed_at)
    return True


def reclaim_stale(doc: Document, now: int, config: ProtocolConfig) -> list[str]:
    """Reset claims older than the stale timeout back to pending."""
    reclaimed = []
    for rec in all_records(doc):
        if rec.status != CLAIMED or rec.claimed_at is None:
            continue
        if now - rec.claimed_at > config.stale_timeout_us:
            write_record(doc, rec.key, rec.description, PENDING, None, None)
            reclaimed.append(rec.key)
    return reclaimed


def next_stale_deadline(doc: Document, config: ProtocolConfig) -> int | None:
    """Earliest virtual time at which some current claim becomes reclaimable."""
    times = [r.claimed_at for r in all_records(doc) if r.status == CLAIMED and r.claimed_at is not None]
    if not times:
        return None
    return min(times) + config.stale_timeout_us + 1
