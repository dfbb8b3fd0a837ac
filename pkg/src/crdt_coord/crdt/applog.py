"""Append-only log read in operation-id order."""

from __future__ import annotations

from bisect import bisect_left

from .ids import OpId


class AppendLog:
    def __init__(self) -> None:
        self._ids: list[OpId] = []
        self._payloads: list[str] = []

    def __len__(self) -> int:
        return len(self._ids)

    def insert(self, oid: OpId, payload: str) -> int:
        """Insert an entry at its sorted position and return that index."""
        i = bisect_left(self._ids, oid)
        self._ids.insert(i, oid)
        self._payloads.insert(i, payload)
        return i

    def read(self) -> list[str]:
        return list(self._payloads)

    def entries(self) -> list[tuple[OpId, str]]:
        return list(zip(self._ids, self._payloads))
