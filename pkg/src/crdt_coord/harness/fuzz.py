"""Randomized convergence trials for the document CRDT.

Each trial drives 2-5 replicas through a random mix of text inserts, text
deletes, map writes and log appends. Between local edits replicas receive
random subsets of the packets produced so far, in random order and with
duplicates, so causal buffering gets exercised. At the end every replica
receives every packet (shuffled, duplicated) and all pairs must converge.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from ..crdt import Document, converged

_ALPHABET = string.ascii_lowercase + " \n{}();"
_KEYS = ("t1", "t2", "t3")
_FIELDS = ("status", "assignedTo")


@dataclass
class TrialResult:
    seed: int
    replicas: int
    ops: int
    packets: int
    converged: bool
    pending_left: int
    text: str


def _local_op(rng: random.Random, doc: Document) -> bytes | None:
    roll = rng.random()
    n = doc.text_length()
    if roll < 0.45 or (roll < 0.65 and n == 0):
        idx = rng.randint(0, n)
        content = "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(1, 4)))
        return doc.text_insert(idx, content).encode()
    if roll < 0.65:
        idx = rng.randrange(n)
        length = rng.randint(1, min(3, n - idx))
        return doc.text_delete(idx, length).encode()
    if roll < 0.88:
        value = rng.choice(["pending", "claimed", "done", None, rng.randint(0, 9)])
        return doc.lww_set(rng.choice(_KEYS), rng.choice(_FIELDS), value).encode()
    return doc.log_append(rng.choice(["claim", "done", "scan", "note"])).encode()


def sec_trial(seed: int, min_ops: int = 20, max_ops: int = 200) -> TrialResult:
    rng = random.Random(seed)
    n_replicas = rng.randint(2, 5)
    n_ops = rng.randint(min_ops, max_ops)
    ids = rng.sample(range(1, 1 << 20), n_replicas)
    docs = [Document(r) for r in ids]
    packets: list[bytes] = []

    for _ in range(n_ops):
        doc = rng.choice(docs)
        if packets and rng.random() < 0.35:
            for i in rng.choices(range(len(packets)), k=rng.randint(1, 6)):
                doc.apply_update(packets[i])
        packets.append(_local_op(rng, doc))

    for doc in docs:
        order = list(range(len(packets)))
        order += rng.choices(order, k=len(order) // 5)
        rng.shuffle(order)
        for i in order:
            doc.apply_update(packets[i])

    ok = all(converged(docs[0], d) for d in docs[1:])
    pending = sum(d.pending_count for d in docs)
    return TrialResult(seed, n_replicas, n_ops, len(packets), ok and pending == 0, pending, docs[0].text_read())


def sec_fuzz(trials: int, base_seed: int = 0) -> list[TrialResult]:
    return [sec_trial(base_seed + i) for i in range(trials)]
