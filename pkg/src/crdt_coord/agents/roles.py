"""Outliner, implementer and evaluator actor bodies.

Every body is a generator for ``crdt_coord.actor.Actor``. Bodies read and
write only their own replica; everything they learn about other agents
arrives as remote change events on that replica.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Generator, Optional

from .. import claims
from ..actor import Sleep, WaitEvent
from ..claims import ClaimOutcome, ProtocolConfig
from ..crdt.document import ChangeEvent, Document
from ..crdt.ids import OpId
from .conflicts import ConflictReport, conflict_scan
from .generator import GenerationRequest, Generator as CodeGenerator
from .script import TaskScript, marker_text

logger = logging.getLogger(__name__)

OUTLINER = "outliner"
IMPLEMENTER = "implementer"
EVALUATOR = "evaluator"


@dataclass(frozen=True)
class AgentConfig:
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    backoff_us: int = 100_000
    evaluator_timeout_us: Optional[int] = None
    evaluator_scan_us: int = 0


@dataclass
class AgentStats:
    claims_attempted: int = 0
    claims_lost: int = 0
    claims_invalid: int = 0
    claims_on_done: int = 0  # attempts against keys already done when scanned
    won: list[str] = field(default_factory=list)
    implemented: list[str] = field(default_factory=list)
    abandoned: list[str] = field(default_factory=list)  # won, then lost before writing
    anomalies: list[str] = field(default_factory=list)
    reclaimed: list[str] = field(default_factory=list)
    retracted: list[str] = field(default_factory=list)  # duplicate bodies withdrawn
    backoffs: int = 0
    chars: int = 0


@dataclass
class AgentState:
    role: str
    replica: int
    active_region: Optional[list[OpId]] = None  # anchor ids of the marker being replaced
    backoff_until: Optional[int] = None
    claimed_key: Optional[str] = None
    stats: AgentStats = field(default_factory=AgentStats)
    report: Optional[ConflictReport] = None
    ready_at: Optional[int] = None  # evaluator: when the completion count was reached
    bodies: dict[str, list[OpId]] = field(default_factory=dict)  # key -> ids of the body we inserted


#: (time, replica, key, outcome) for every finished claim
ClaimSink = Callable[[int, int, str, ClaimOutcome], None]


class Context:
    """What a role body needs from its host: the replica, a clock and a trace hook."""

    def __init__(self, doc: Document, now: Callable[[], int], record: Callable[..., None] | None = None,
                 claim_sink: ClaimSink | None = None) -> None:
        self.doc = doc
        self.now = now
        self._record = record
        self.claim_sink = claim_sink

    def record(self, event: str, **detail) -> None:
        if self._record is not None:
            self._record(event, **detail)


# -- adaptation -------------------------------------------------------------------


def region_span(doc: Document, anchors: list[OpId]) -> tuple[int, int] | None:
    """Visible [start, end) currently covered by the still-visible anchors."""
    idx = [i for i in (doc.text_index_of(a) for a in anchors) if i is not None]
    if not idx:
        return None
    return min(idx), max(idx) + 1


IMPL_PREFIX = "impl:"


def implementer_of(doc: Document, key: str) -> int | None:
    """Replica whose body for ``key`` survives (last writer of ``impl:<key>``)."""
    return doc.lww_get(IMPL_PREFIX + key, "by")


def retract_if_superseded(state: AgentState, doc: Document, key: str) -> bool:
    """Withdraw our body for ``key`` when another replica's body won the register.

    Two agents can both pass verification when a claim write is slower than
    the sync delay. Both bodies then land at the same anchors; the one whose
    author lost the ``impl:<key>`` register is deleted by its own author.
    """
    ids = state.bodies.get(key)
    if ids is None:
        return False
    owner = implementer_of(doc, key)
    if owner is None or owner == doc.replica:
        return False
    del state.bodies[key]
    doc.text_delete_ids([i for i in ids if doc.text_index_of(i) is not None])
    state.stats.retracted.append(key)
    return True


def on_remote_change(state: AgentState, doc: Document, ev: ChangeEvent, now: int, config: AgentConfig,
                     record: Callable[..., None] | None = None) -> str | None:
    """React to one remote event; returns the adaptation applied, if any.

    Completed-work skipping needs no bookkeeping here because the work queue
    is re-derived from the replica before every claim.
    """
    if ev.kind == "map" and ev.scope[0].startswith(IMPL_PREFIX):
        key = ev.scope[0][len(IMPL_PREFIX):]
        if retract_if_superseded(state, doc, key):
            if record is not None:
                record("retract", key=key, owner=implementer_of(doc, key))
            return "retract"
        return None
    if ev.kind != "text" or state.active_region is None:
        return None
    span = region_span(doc, state.active_region)
    if span is None:
        return None
    start, length = ev.scope
    lo, hi = span
    # inserted text lands between anchors, or a delete touched them
    if start < hi and start + max(length, 1) > lo:
        state.backoff_until = now + config.backoff_us
        state.stats.backoffs += 1
        return "backoff"
    return None


# -- outliner -----------------------------------------------------------------------


class OutlineError(RuntimeError):
    pass


def run_outliner(ctx: Context, script: TaskScript, state: AgentState | None = None) -> Generator:
    doc = ctx.doc
    if doc.text_length() or claims.todo_keys(doc):
        raise OutlineError("outliner needs an empty document")
    script.validate()
    if script.outline_ms:
        yield Sleep(script.outline_ms * 1000)
    if doc.text_length() or claims.todo_keys(doc):
        raise OutlineError("document changed while outlining")
    if script.skeleton:
        doc.text_insert(0, script.skeleton)
    claims.publish_todos(doc, [(t.key, t.description) for t in script.todos])
    doc.log_append(f"outline {script.name}: {len(script.todos)} todos")
    ctx.record("outlined", todos=len(script.todos), chars=len(script.skeleton))
    return len(script.todos)


# -- implementer -------------------------------------------------------------------


def _release(ctx: Context, state: AgentState, key: str, why: str) -> None:
    """Give a held claim back so another agent (or a later pass) can take it."""
    doc = ctx.doc
    state.stats.anomalies.append(key)
    ctx.record("anomaly", key=key, reason=why)
    if claims.holds_claim(doc, key):
        rec = claims.read_record(doc, key)
        claims.write_record(doc, key, rec.description, claims.PENDING, None, None)


def _settle_missing(ctx: Context, state: AgentState, key: str, why: str) -> None:
    """The marker is gone: if someone already filled it, finish the record, else release."""
    if implementer_of(ctx.doc, key) is not None and claims.holds_claim(ctx.doc, key):
        claims.mark_done(ctx.doc, key)
        ctx.record("settled", key=key, reason=why, owner=implementer_of(ctx.doc, key))
        return
    _release(ctx, state, key, why)


def _implement(ctx: Context, state: AgentState, key: str, generator: CodeGenerator, config: AgentConfig) -> Generator:
    doc = ctx.doc
    rec = claims.read_record(doc, key)
    marker = marker_text(key, rec.description)
    snapshot = doc.text_read()
    at = snapshot.find(marker)
    if at < 0:
        _settle_missing(ctx, state, key, "marker missing")
        return False
    state.active_region = doc.text_ids(at, len(marker))
    state.claimed_key = key
    try:
        response = generator.generate(GenerationRequest(snapshot, key, rec.description))
        yield Sleep(response.delay_us)
        if not claims.holds_claim(doc, key):
            # a concurrent claim overtook ours while we were generating
            state.stats.abandoned.append(key)
            ctx.record("abandon", key=key, owner=(claims.read_record(doc, key).assigned_to))
            return False
        if state.backoff_until is not None and state.backoff_until > ctx.now():
            yield Sleep(state.backoff_until - ctx.now())
        state.backoff_until = None
        if not claims.holds_claim(doc, key):
            state.stats.abandoned.append(key)
            ctx.record("abandon", key=key, owner=(claims.read_record(doc, key).assigned_to))
            return False
        span = region_span(doc, state.active_region)
        if span is None:
            _settle_missing(ctx, state, key, "marker removed")
            return False
        doc.text_insert(span[0], response.body)
        state.bodies[key] = doc.text_ids(span[0], len(response.body))
        doc.text_delete_ids(state.active_region)
        doc.lww_set(IMPL_PREFIX + key, "by", doc.replica)
        claims.mark_done(doc, key)
    finally:
        state.active_region = None
        state.claimed_key = None
        state.backoff_until = None
    state.stats.implemented.append(key)
    state.stats.chars += len(response.body)
    ctx.record("implemented", key=key, chars=len(response.body))
    return True


def _all_done(doc: Document) -> bool:
    recs = claims.all_records(doc)
    return bool(recs) and all(r.status == claims.DONE for r in recs)


def run_implementer(ctx: Context, generator: CodeGenerator, config: AgentConfig, state: AgentState) -> Generator:
    """Claim and fill work items until every published item is done.

    The loop also outlives its own work so that it can reclaim items whose
    claimant went silent; that is what keeps the run live under crashes.
    """
    doc = ctx.doc
    proto = config.protocol
    stats = state.stats
    while True:
        if _all_done(doc):
            return stats
        stale = claims.reclaim_stale(doc, ctx.now(), proto)
        if stale:
            stats.reclaimed.extend(stale)
            ctx.record("reclaim", keys=stale)
        progressed = False
        attempts = 0
        for key in claims.scan_pending(doc):
            if key in stats.anomalies:
                continue
            rec = claims.read_record(doc, key)
            if rec is None or rec.status != claims.PENDING or rec.assigned_to is not None:
                continue  # changed since the scan; nothing to claim
            stats.claims_attempted += 1
            attempts += 1
            outcome = yield from claims.claim(doc, key, proto, ctx.now())
            ctx.record("claim", key=key, outcome=str(outcome))
            if ctx.claim_sink is not None:
                ctx.claim_sink(ctx.now(), doc.replica, key, outcome)
            if outcome.won:
                stats.won.append(key)
                yield from _implement(ctx, state, key, generator, config)
                progressed = True
                break
            if outcome.kind == "lost":
                stats.claims_lost += 1
            else:
                stats.claims_invalid += 1
                if outcome.reason == "done":
                    stats.claims_on_done += 1
            if proto.max_retries and attempts >= proto.max_retries:
                break
        if progressed:
            continue
        if _all_done(doc):
            return stats
        yield WaitEvent(claims.next_stale_deadline(doc, proto))


# -- evaluator ------------------------------------------------------------------------


def run_evaluator(ctx: Context, expected: int, config: AgentConfig, state: AgentState | None = None) -> Generator:
    doc = ctx.doc
    start = ctx.now()
    deadline = None if config.evaluator_timeout_us is None else start + config.evaluator_timeout_us
    complete = True
    while claims.completion_count(doc) < expected:
        if deadline is not None and ctx.now() >= deadline:
            complete = False
            break
        yield WaitEvent(deadline)
    if state is not None:
        state.ready_at = ctx.now()
    if config.evaluator_scan_us:
        yield Sleep(config.evaluator_scan_us)
    report = conflict_scan(doc.text_read(), ctx.now(), complete)
    doc.log_append(json.dumps({"evaluation": report.to_dict()}, sort_keys=True))
    ctx.record("evaluated", duplicates=report.count, complete=complete)
    if state is not None:
        state.report = report
    return report
