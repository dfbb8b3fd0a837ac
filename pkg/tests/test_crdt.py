import random
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from crdt_coord.crdt import BEGIN, DecodeError, Document, OpId, UpdatePacket, converged, new_replica
from crdt_coord.crdt.ops import LogAppend, MapSet, SeqDelete, SeqInsert
from crdt_coord.harness.fuzz import sec_trial

from oracles import lww_winner, rga_tree_text


def advance(doc, clock):
    """Burn log appends until the next local op gets ``clock``."""
    while doc.clock < clock - 1:
        doc.log_append("tick")


def cross(a, b):
    pa = a.encode_update_since({})
    pb = b.encode_update_since({})
    a.apply_update(pb)
    b.apply_update(pa)


# -- new_replica ------------------------------------------------------------


def test_new_replica_is_empty():
    doc = new_replica(7)
    assert doc.text_read() == ""
    assert doc.state_vector() == {}
    assert doc.encode_update_since(doc.state_vector()).is_empty
    assert doc.log_read() == []


# -- LWW map ----------------------------------------------------------------


def test_read_your_writes():
    doc = new_replica(1)
    doc.lww_set("t1", "assignedTo", "A")
    assert doc.lww_get("t1", "assignedTo") == "A"


def test_unwritten_key_is_absent():
    doc = new_replica(1)
    assert doc.lww_get("nope", "status") is None
    assert not doc.lww_has("nope", "status")


def test_set_then_get_status():
    doc = new_replica(1)
    doc.lww_set("t1", "status", "pending")
    assert doc.lww_get("t1", "status") == "pending"


@pytest.mark.parametrize(
    "c1, c2, expected",
    [(5, 5, "B"), (7, 5, "A"), (4, 9, "B")],
)
def test_concurrent_lww_writes_both_orders(c1, c2, expected):
    for order in (0, 1):
        r1, r2 = new_replica(1), new_replica(2)
        advance(r1, c1)
        advance(r2, c2)
        p1 = r1.lww_set("t1", "assignedTo", "A")
        p2 = r2.lww_set("t1", "assignedTo", "B")
        assert p1.ops[0].id == OpId(c1, 1) and p2.ops[0].id == OpId(c2, 2)
        observer = new_replica(3)
        for p in ((p1, p2) if order == 0 else (p2, p1)):
            observer.apply_update(p.encode())
        r1.apply_update(p2)
        r2.apply_update(p1)
        oracle = lww_winner([(c1, 1, "A"), (c2, 2, "B")])
        assert oracle == expected
        for d in (r1, r2, observer):
            assert d.lww_get("t1", "assignedTo") == expected


@pytest.mark.parametrize("n_writers", [2, 3, 4])
def test_lww_brute_force_interleavings(n_writers):
    rng = random.Random(n_writers)
    for _ in range(5):
        writes = []
        packets = []
        for replica in range(1, n_writers + 1):
            doc = new_replica(replica)
            clock = rng.randint(1, 4)
            advance(doc, clock)
            value = f"v{replica}"
            packets.append(doc.lww_set("k", "f", value))
            writes.append((clock, replica, value))
        expected = lww_winner(writes)
        for order in permutations(packets):
            doc = new_replica(99)
            for p in order:
                doc.apply_update(p)
            assert doc.lww_get("k", "f") == expected


def test_map_rejects_non_scalar():
    doc = new_replica(1)
    with pytest.raises(TypeError):
        doc.lww_set("k", "f", 1.5)


# -- text -------------------------------------------------------------------


def test_insert_into_empty():
    doc = new_replica(1)
    doc.text_insert(0, "abc")
    assert doc.text_read() == "abc"


def test_insert_out_of_range():
    doc = new_replica(1)
    doc.text_insert(0, "ab")
    with pytest.raises(IndexError):
        doc.text_insert(3, "x")


def test_concurrent_same_index_inserts_both_orders():
    ops = []
    r1, r2 = new_replica(1), new_replica(2)
    p1 = r1.text_insert(0, "abc")
    p2 = r2.text_insert(0, "xyz")
    ops = [(tuple(p1.ops[0].id), tuple(p1.ops[0].origin), "abc"), (tuple(p2.ops[0].id), tuple(p2.ops[0].origin), "xyz")]
    expected = rga_tree_text(ops, set())
    assert expected == "xyzabc"
    for order in ((p1, p2), (p2, p1)):
        doc = new_replica(3)
        for p in order:
            doc.apply_update(p)
        assert doc.text_read() == expected
    r1.apply_update(p2)
    r2.apply_update(p1)
    assert r1.text_read() == r2.text_read() == "xyzabc"


def test_delete_middle():
    doc = new_replica(1)
    doc.text_insert(0, "abc")
    doc.text_delete(1, 1)
    assert doc.text_read() == "ac"


def test_delete_zero_is_noop():
    doc = new_replica(1)
    doc.text_insert(0, "abc")
    before = doc.state_vector()
    p = doc.text_delete(0, 0)
    assert p.is_empty
    assert doc.state_vector() == before


def test_delete_out_of_range():
    doc = new_replica(1)
    doc.text_insert(0, "abc")
    with pytest.raises(IndexError):
        doc.text_delete(2, 2)


def test_concurrent_delete_same_char():
    base = new_replica(1)
    seed = base.text_insert(0, "abc")
    r2, r3 = new_replica(2), new_replica(3)
    r2.apply_update(seed)
    r3.apply_update(seed)
    d2 = r2.text_delete(1, 1)
    d3 = r3.text_delete(1, 1)
    results = []
    for order in ((d2, d3), (d3, d2)):
        doc = new_replica(4)
        doc.apply_update(seed)
        for p in order:
            doc.apply_update(p)
        results.append(doc.text_read())
    r2.apply_update(d3)
    r3.apply_update(d2)
    assert results == ["ac", "ac"]
    assert r2.text_read() == r3.text_read() == "ac"


def test_tombstones_are_kept():
    doc = new_replica(1)
    doc.text_insert(0, "abcdef")
    doc.text_delete(1, 3)
    assert doc.text_read() == "aef"
    assert sum(len(r.content) for r in doc.text.runs) == 6


def test_interior_insert_splits_run():
    doc = new_replica(1)
    doc.text_insert(0, "abcd")
    doc.text_insert(2, "XY")
    assert doc.text_read() == "abXYcd"
    other = new_replica(2)
    other.apply_update(doc.encode_update_since({}))
    assert other.text_read() == "abXYcd"


# -- log --------------------------------------------------------------------


def test_log_append_order():
    doc = new_replica(1)
    doc.log_append("a")
    doc.log_append("b")
    assert doc.log_read() == ["a", "b"]


def test_log_concurrent_appends_total_order():
    r1, r2 = new_replica(1), new_replica(2)
    p1 = r1.log_append("x")
    p2 = r2.log_append("y")
    r1.apply_update(p2)
    r2.apply_update(p1)
    assert r1.log_read() == r2.log_read() == ["x", "y"]


def test_empty_log():
    assert new_replica(1).log_read() == []


# -- state vector / delta ---------------------------------------------------


def test_state_vector_local_ops():
    doc = new_replica(7)
    doc.lww_set("a", "f", 1)
    doc.log_append("x")
    doc.lww_set("b", "f", 2)
    assert doc.state_vector() == {7: 3}


def test_state_vector_after_remote_packet():
    src = new_replica(9)
    src.log_append("a")
    src.log_append("b")
    doc = new_replica(7)
    doc.log_append("mine")
    doc.apply_update(src.encode_update_since({}))
    assert doc.state_vector() == {7: 1, 9: 2}


def test_encode_update_since():
    doc = new_replica(7)
    for i in range(5):
        doc.log_append(str(i))
    assert doc.encode_update_since(doc.state_vector()).is_empty
    assert len(doc.encode_update_since({})) == 5
    missing = doc.encode_update_since({7: 2})
    full = {op.id for op in doc.encode_update_since({}).ops}
    expected = {oid for oid in full if oid.clock > 2}
    assert {op.id for op in missing.ops} == expected
    assert sorted(op.id.clock for op in missing.ops) == [3, 4, 5]


def test_state_vector_never_decreases():
    a, b = new_replica(1), new_replica(2)
    for i in range(4):
        a.log_append(str(i))
    b.log_append("x")
    before = a.state_vector()
    a.apply_update(b.encode_update_since({}))
    after = a.state_vector()
    assert all(after.get(r, 0) >= c for r, c in before.items())


# -- apply_update -----------------------------------------------------------


def test_apply_twice_is_idempotent():
    src = new_replica(1)
    p = src.text_insert(0, "hello")
    doc = new_replica(2)
    assert len(doc.apply_update(p)) == 1
    snapshot = (doc.text_read(), doc.state_vector())
    assert doc.apply_update(p) == []
    assert (doc.text_read(), doc.state_vector()) == snapshot


def test_out_of_order_insert_buffered():
    src = new_replica(1)
    p1 = src.text_insert(0, "ab")
    p2 = src.text_insert(2, "cd")
    doc = new_replica(2)
    assert doc.apply_update(p2) == []
    assert doc.pending_count == 1
    events = doc.apply_update(p1)
    assert len(events) == 2
    assert doc.pending_count == 0
    assert doc.text_read() == "abcd"


def test_delete_before_target_buffered():
    src = new_replica(1)
    p1 = src.text_insert(0, "abc")
    p2 = src.text_delete(0, 1)
    doc = new_replica(2)
    doc.apply_update(p2)
    assert doc.pending_count == 1
    doc.apply_update(p1)
    assert doc.text_read() == "bc"


def test_malformed_packet_leaves_document_unchanged():
    doc = new_replica(1)
    doc.text_insert(0, "keep")
    good = new_replica(2).text_insert(0, "zz").encode()
    with pytest.raises(DecodeError):
        doc.apply_update(good[:-3])
    with pytest.raises(DecodeError):
        doc.apply_update(b"\x00" + good[1:])
    assert doc.text_read() == "keep"
    assert doc.state_vector() == {1: 4}


def test_ten_op_permutations_converge():
    rng = random.Random(4)
    docs = [new_replica(r) for r in (1, 2, 3)]
    packets = []
    for i in range(10):
        d = docs[i % 3]
        if packets and i % 4 == 0:
            d.apply_update(packets[-1])
        n = d.text_length()
        if n and rng.random() < 0.3:
            packets.append(d.text_delete(rng.randrange(n), 1))
        else:
            packets.append(d.text_insert(rng.randint(0, n), "abcdefghij"[i]))
    texts = set()
    for _ in range(200):
        order = packets[:]
        rng.shuffle(order)
        doc = new_replica(50)
        for p in order:
            doc.apply_update(p)
        assert doc.pending_count == 0
        texts.add(doc.text_read())
    assert len(texts) == 1


# -- converged --------------------------------------------------------------


def test_converged_fresh():
    assert converged(new_replica(1), new_replica(2))


def test_converged_after_exchange_and_not_before():
    a, b = new_replica(1), new_replica(2)
    a.text_insert(0, "abc")
    b.lww_set("k", "f", "v")
    b.log_append("hi")
    assert not converged(a, b)
    cross(a, b)
    assert converged(a, b)
    a.log_append("late")
    assert not converged(a, b)


# -- codec ------------------------------------------------------------------


def test_packet_roundtrip_all_kinds():
    p = UpdatePacket(
        (
            MapSet(OpId(1, 3), "todo:a", "status", "pending"),
            MapSet(OpId(2, 3), "todo:a", "claimedAt", -5),
            MapSet(OpId(3, 3), "todo:a", "assignedTo", None),
            SeqInsert(OpId(4, 3), BEGIN, "héllo"),
            SeqDelete(OpId(9, 3), OpId(4, 3), 2),
            LogAppend(OpId(10, 3), "ok"),
        ),
        {3: 10, 8: 2},
    )
    assert UpdatePacket.decode(p.encode()) == p


def test_packet_header_bytes():
    raw = UpdatePacket((), {}).encode()
    assert raw == bytes.fromhex("54444343") + b"\x01" + b"\x00\x00\x00\x00" + b"\x00\x00\x00\x00"


def test_begin_origin_wire_encoding():
    raw = UpdatePacket((SeqInsert(OpId(1, 2), BEGIN, "a"),), {}).encode()
    assert b"\xff" * 8 in raw


@pytest.mark.parametrize("cut", [0, 3, 8, 12, 20])
def test_truncated_packets_rejected(cut):
    raw = new_replica(1).text_insert(0, "abc").encode()
    with pytest.raises(DecodeError):
        UpdatePacket.decode(raw[:cut])


def test_trailing_garbage_rejected():
    raw = new_replica(1).text_insert(0, "abc").encode()
    with pytest.raises(DecodeError):
        UpdatePacket.decode(raw + b"\x00")


# -- properties -------------------------------------------------------------

edit = st.tuples(st.integers(0, 3), st.sampled_from(["ins", "del", "map", "log"]), st.integers(0, 50), st.text("abc", min_size=1, max_size=3))


def _play(edits, seed):
    docs = [new_replica(r) for r in (11, 5, 23, 2)]
    packets = []
    rng = random.Random(seed)
    for who, kind, pos, s in edits:
        d = docs[who]
        if packets and rng.random() < 0.4:
            d.apply_update(rng.choice(packets))
        n = d.text_length()
        if kind == "ins":
            packets.append(d.text_insert(pos % (n + 1), s))
        elif kind == "del" and n:
            i = pos % n
            packets.append(d.text_delete(i, min(len(s), n - i)))
        elif kind == "map":
            packets.append(d.lww_set("k", s[0], s))
        else:
            packets.append(d.log_append(s))
    return docs, packets


@settings(max_examples=60, deadline=None)
@given(st.lists(edit, max_size=25), st.integers(0, 1000))
def test_sec_matches_tree_oracle(edits, seed):
    docs, packets = _play(edits, seed)
    rng = random.Random(seed + 1)
    for d in docs:
        order = packets[:] + packets[: len(packets) // 3]
        rng.shuffle(order)
        for p in order:
            d.apply_update(p)
    inserts = [(tuple(op.id), tuple(op.origin), op.content) for p in packets for op in p.ops if isinstance(op, SeqInsert)]
    deleted = {
        (op.target.clock + i, op.target.replica)
        for p in packets
        for op in p.ops
        if isinstance(op, SeqDelete)
        for i in range(op.length)
    }
    expected = rga_tree_text(inserts, deleted)
    for d in docs:
        assert d.text_read() == expected
        assert converged(d, docs[0])
        logs = [(op.id, op.payload) for p in packets for op in p.ops if isinstance(op, LogAppend)]
        assert d.log_read() == [pl for _, pl in sorted(logs)]


@settings(max_examples=40, deadline=None)
@given(st.lists(edit, max_size=20), st.integers(0, 1000))
def test_packet_level_commutativity(edits, seed):
    _, packets = _play(edits, seed)
    if len(packets) < 2:
        return
    rng = random.Random(seed)
    i, j = rng.sample(range(len(packets)), 2)
    rest = [p for k, p in enumerate(packets) if k not in (i, j)]
    a, b = new_replica(77), new_replica(78)
    for p in rest + [packets[i], packets[j]]:
        a.apply_update(p)
    for p in rest + [packets[j], packets[i]]:
        b.apply_update(p)
    assert converged(a, b)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.text("xyz", min_size=1, max_size=4)), min_size=1, max_size=6))
def test_concurrent_inserts_never_lost(inserts):
    base = new_replica(1)
    seed = base.text_insert(0, "0123456789")
    packets = [seed]
    for k, (pos, s) in enumerate(inserts):
        d = new_replica(10 + k)
        d.apply_update(seed)
        packets.append(d.text_insert(pos % 11, s))
    doc = new_replica(2)
    for p in reversed(packets):
        doc.apply_update(p)
    assert doc.text_length() == 10 + sum(len(s) for _, s in inserts)


def test_idempotent_state_equality():
    docs, packets = _play([(0, "ins", 0, "ab"), (1, "ins", 0, "cd"), (0, "del", 1, "a"), (2, "map", 0, "q")], 3)
    a = new_replica(40)
    for p in packets:
        a.apply_update(p)
    snap = (a.text_read(), a.map_snapshot(), a.log_read(), a.state_vector())
    for p in packets:
        assert a.apply_update(p) == []
    assert (a.text_read(), a.map_snapshot(), a.log_read(), a.state_vector()) == snap


@pytest.mark.parametrize("seed", range(40))
def test_sec_fuzz_sample(seed):
    assert sec_trial(seed).converged
