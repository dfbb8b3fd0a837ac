"""Operation identifiers and state vectors.

An ``OpId`` is a ``(clock, replica)`` pair. Tuple ordering gives the total
order used for every conflict decision: higher clock wins, equal clocks are
broken by the numerically larger replica id.
"""

from __future__ import annotations

from typing import NamedTuple

U64_MAX = 0xFFFF_FFFF_FFFF_FFFF

#: Replica id reserved for the BEGIN sentinel on the wire.
BEGIN_REPLICA = U64_MAX


class OpId(NamedTuple):
    clock: int
    replica: int

    def __str__(self) -> str:
        if self.replica == BEGIN_REPLICA:
            return "BEGIN"
        return f"{self.clock}@{self.replica}"


BEGIN = OpId(0, BEGIN_REPLICA)

StateVector = dict[int, int]


def check_replica_id(replica: int) -> int:
    if not isinstance(replica, int) or isinstance(replica, bool):
        raise TypeError(f"replica id must be int, got {type(replica).__name__}")
    if not 0 <= replica < BEGIN_REPLICA:
        raise ValueError(f"replica id out of range: {replica}")
    return replica


def vector_covers(vector: StateVector, replica: int, clock: int) -> bool:
    return vector.get(replica, 0) >= clock


def merge_vectors(a: StateVector, b: StateVector) -> StateVector:
    out = dict(a)
    for replica, clock in b.items():
        if clock > out.get(replica, 0):
            out[replica] = clock
    return out
