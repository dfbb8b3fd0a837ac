"""Ordered simulation trace with a JSON-lines export.

The first line is a header object holding the run configuration; every other
line is ``{"time", "actor", "event", "detail"}`` in that key order with the
detail keys sorted, so equal traces serialize to equal bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, NamedTuple


class TraceRecord(NamedTuple):
    time: int
    actor: str
    event: str
    detail: dict

    def to_json(self) -> str:
        return _dump(self)


def _dump(rec: TraceRecord) -> str:
    detail = json.dumps(rec.detail, sort_keys=True, separators=(",", ":"), default=str)
    head = json.dumps({"time": rec.time, "actor": rec.actor, "event": rec.event}, separators=(",", ":"))
    return head[:-1] + ',"detail":' + detail + "}"


@dataclass
class SimTrace:
    header: dict[str, Any] = field(default_factory=dict)
    records: list[TraceRecord] = field(default_factory=list)
    quiescent: bool = True
    enabled: bool = True

    def add(self, time: int, actor: str, event: str, detail: dict) -> None:
        if self.enabled:
            self.records.append(TraceRecord(time, actor, event, detail))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def select(self, event: str | None = None, actor: str | None = None) -> list[TraceRecord]:
        return [r for r in self.records if (event is None or r.event == event) and (actor is None or r.actor == actor)]

    def lines(self) -> list[str]:
        head = json.dumps({"header": self.header, "quiescent": self.quiescent}, sort_keys=True, separators=(",", ":"))
        return [head] + [_dump(r) for r in self.records]

    def to_jsonl(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str) -> "SimTrace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty trace")
        head = json.loads(lines[0])
        if "header" not in head:
            raise ValueError("trace has no header line")
        trace = cls(header=head["header"], quiescent=head.get("quiescent", True))
        for ln in lines[1:]:
            obj = json.loads(ln)
            trace.records.append(TraceRecord(obj["time"], obj["actor"], obj["event"], obj["detail"]))
        return trace

    @classmethod
    def load(cls, path: str | Path) -> "SimTrace":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def first_difference(a: SimTrace, b: SimTrace) -> int | None:
    """Index of the first differing serialized line, or None when identical."""
    la, lb = a.lines(), b.lines()
    for i, (x, y) in enumerate(zip(la, lb)):
        if x != y:
            return i
    if len(la) != len(lb):
        return min(len(la), len(lb))
    return None
