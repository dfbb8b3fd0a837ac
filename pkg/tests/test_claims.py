import pytest

from crdt_coord import claims
from crdt_coord.actor import Sleep
from crdt_coord.claims import ClaimError, ProtocolConfig
from crdt_coord.crdt import Document
from crdt_coord.runtime import US_PER_S

CFG = ProtocolConfig()


def start(doc, key, now=0):
    """Run a claim up to its wait; return the suspended generator."""
    gen = claims.claim(doc, key, CFG, now)
    cmd = next(gen)
    assert isinstance(cmd, Sleep) and cmd.us == CFG.sync_delay_us
    return gen


def finish(gen):
    with pytest.raises(StopIteration) as stop:
        gen.send(None)
    return stop.value.value


def immediate(doc, key, now=0):
    """Claims that return without waiting (precondition failures)."""
    gen = claims.claim(doc, key, CFG, now)
    with pytest.raises(StopIteration) as stop:
        next(gen)
    return stop.value.value


def exchange(*docs):
    snaps = [d.encode_update_since({}).encode() for d in docs]
    for d in docs:
        for s in snaps:
            d.apply_update(s)


def seeded(*replicas, keys=("k",)):
    origin = Document(0xFFFF)
    claims.publish_todos(origin, [(k, f"do {k}") for k in keys])
    raw = origin.encode_update_since({}).encode()
    docs = [Document(r) for r in replicas]
    for d in docs:
        d.apply_update(raw)
    return docs


def test_publish_writes_pending_records():
    (doc,) = seeded(1, keys=("a", "b"))
    recs = claims.all_records(doc)
    assert [(r.key, r.status, r.assigned_to, r.claimed_at) for r in recs] == [
        ("a", "pending", None, None), ("b", "pending", None, None)]
    assert claims.scan_pending(doc) == ["a", "b"]


def test_publish_duplicate_rejected_before_any_write():
    doc = Document(1)
    with pytest.raises(ClaimError):
        claims.publish_todos(doc, [("a", "x"), ("b", "y"), ("a", "z")])
    assert doc.clock == 0
    claims.publish_todos(doc, [("a", "x")])
    with pytest.raises(ClaimError):
        claims.publish_todos(doc, [("a", "again")])


def test_single_claim_wins():
    (doc,) = seeded(1)
    outcome = finish(start(doc, "k", now=7))
    assert outcome == claims.Won()
    rec = claims.read_record(doc, "k")
    assert (rec.status, rec.assigned_to, rec.claimed_at) == ("claimed", 1, 7)


def test_equal_clock_tie_goes_to_higher_replica():
    a, b = seeded(1, 2)
    ga, gb = start(a, "k"), start(b, "k")
    assert claims.read_record(a, "k").logical_clock == claims.read_record(b, "k").logical_clock
    exchange(a, b)
    assert str(finish(ga)) == "Lost(2)"
    assert str(finish(gb)) == "Won"


def test_higher_clock_beats_higher_replica():
    a, b = seeded(9, 2)
    while a.clock < 8:
        a.log_append("busy")
    ga = start(a, "k")
    gb = start(b, "k")
    # seeding left both at clock 5; a has done three more local writes
    assert claims.read_record(a, "k").logical_clock == 9
    assert claims.read_record(b, "k").logical_clock == 6
    exchange(a, b)
    assert finish(ga).won
    assert str(finish(gb)) == "Lost(9)"


def test_records_are_never_torn():
    a, b = seeded(1, 2)
    start(a, "k")
    start(b, "k")
    exchange(a, b)
    for d in (a, b):
        rec = d.map_record("todo:k")
        writers = {d.lww_writer("todo:k", f).replica for f in claims.FIELDS}
        assert len(writers) == 1 and rec["assignedTo"] in writers


def test_claim_preconditions():
    (doc,) = seeded(1)
    assert str(immediate(doc, "missing")) == "Invalid(unknown)"
    finish(start(doc, "k"))
    before = doc.clock
    assert str(immediate(doc, "k")) == "Lost(1)"  # re-claim is a no-op
    assert doc.clock == before
    claims.mark_done(doc, "k")
    assert str(immediate(doc, "k")) == "Invalid(done)"


def test_mark_done_rules():
    a, b = seeded(1, 2)
    finish(start(a, "k"))
    exchange(a, b)
    with pytest.raises(ClaimError):
        claims.mark_done(b, "k")
    assert claims.mark_done(a, "k") is True
    assert claims.mark_done(a, "k") is False
    rec = claims.read_record(a, "k")
    assert rec.status == "done" and rec.assigned_to == 1
    with pytest.raises(ClaimError):
        claims.mark_done(a, "nope")


def test_completion_count():
    (doc,) = seeded(1, keys=("a", "b", "c"))
    assert claims.completion_count(doc) == 0
    for k in ("a", "c"):
        finish(start(doc, k))
        claims.mark_done(doc, k)
    assert claims.completion_count(doc) == 2


@pytest.mark.parametrize("age_s,expect", [(60, []), (120, []), (120.000001, ["k"]), (121, ["k"])])
def test_stale_reclaim_threshold(age_s, expect):
    (doc,) = seeded(1)
    finish(start(doc, "k", now=0))
    assert claims.reclaim_stale(doc, int(age_s * US_PER_S), CFG) == expect
    rec = claims.read_record(doc, "k")
    assert rec.status == ("pending" if expect else "claimed")


def test_next_stale_deadline():
    (doc,) = seeded(1, keys=("a", "b"))
    assert claims.next_stale_deadline(doc, CFG) is None
    finish(start(doc, "a", now=5))
    finish(start(doc, "b", now=3))
    assert claims.next_stale_deadline(doc, CFG) == 3 + CFG.stale_timeout_us + 1


def test_aba_logical_clock_strictly_increases():
    """Claimed, reset, claimed again: each write carries a newer clock."""
    a, b = seeded(1, 2)
    clocks = []
    finish(start(a, "k", now=0))
    clocks.append(claims.read_record(a, "k").logical_clock)
    exchange(a, b)
    claims.reclaim_stale(b, 200 * US_PER_S, CFG)
    clocks.append(claims.read_record(b, "k").logical_clock)
    exchange(a, b)
    finish(start(a, "k", now=201 * US_PER_S))
    clocks.append(claims.read_record(a, "k").logical_clock)
    exchange(a, b)
    assert clocks == sorted(clocks) and len(set(clocks)) == 3
    # an old claim replayed late cannot resurrect: the newest write stays
    assert claims.read_record(b, "k").assigned_to == 1
    assert claims.read_record(b, "k").logical_clock == clocks[-1]


def test_ack_mode_falls_back_to_delay_on_failed_ack():
    (doc,) = seeded(1)
    gen = claims.claim(doc, "k", ProtocolConfig(verify_mode="ack"), 0)
    first = next(gen)
    assert type(first).__name__ == "WaitAck"
    second = gen.send(False)
    assert isinstance(second, Sleep)
    assert finish(gen).won


@pytest.mark.parametrize("kwargs", [
    {"sync_delay_us": 0},
    {"stale_timeout_us": 10, "sync_delay_us": 10},
    {"max_retries": -1},
    {"verify_mode": "psychic"},
])
def test_protocol_config_validation(kwargs):
    with pytest.raises(ValueError):
        ProtocolConfig(**kwargs)
