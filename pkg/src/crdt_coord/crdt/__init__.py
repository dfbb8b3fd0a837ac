"""Replicated document types with strong eventual consistency."""

from .document import LOCAL, REMOTE, ChangeEvent, Document, converged, new_replica
from .ids import BEGIN, OpId, StateVector
from .ops import DecodeError, LogAppend, MapSet, SeqDelete, SeqInsert, UpdatePacket

__all__ = [
    "BEGIN",
    "LOCAL",
    "REMOTE",
    "ChangeEvent",
    "DecodeError",
    "Document",
    "LogAppend",
    "MapSet",
    "OpId",
    "SeqDelete",
    "SeqInsert",
    "StateVector",
    "UpdatePacket",
    "converged",
    "new_replica",
]
