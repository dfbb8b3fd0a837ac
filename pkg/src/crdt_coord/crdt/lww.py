"""Last-writer-wins map of ``key -> field -> value`` cells."""

from __future__ import annotations

from .ids import OpId
from .ops import Scalar


class LwwMap:
    def __init__(self) -> None:
        # key -> field -> (writer, value)
        self.entries: dict[str, dict[str, tuple[OpId, Scalar]]] = {}

    def apply(self, writer: OpId, key: str, field: str, value: Scalar) -> bool:
        """Merge one write; return True if it became the cell's value."""
        fields = self.entries.get(key)
        if fields is None:
            fields = self.entries[key] = {}
        cur = fields.get(field)
        if cur is not None and cur[0] >= writer:
            return False
        fields[field] = (writer, value)
        return True

    def get(self, key: str, field: str) -> tuple[OpId, Scalar] | None:
        fields = self.entries.get(key)
        if fields is None:
            return None
        return fields.get(field)

    def record(self, key: str) -> dict[str, Scalar] | None:
        fields = self.entries.get(key)
        if fields is None:
            return None
        return {f: cell[1] for f, cell in fields.items()}

    def snapshot(self) -> dict[str, dict[str, Scalar]]:
        return {k: {f: c[1] for f, c in fs.items()} for k, fs in self.entries.items()}
