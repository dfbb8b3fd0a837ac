"""Subscriptions to document change events.

Callbacks run after the mutating ``apply_update`` (or local edit) has
committed, once per newly applied operation that passes the filter.
Re-delivered operations produce no events, so a subscriber's callback count
equals the number of distinct matching operations it has seen.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from ..crdt.document import ChangeEvent, Document


@dataclass(frozen=True)
class EventFilter:
    origin: Optional[str] = None  # "local", "remote" or None for both
    kinds: Optional[frozenset[str]] = None  # subset of {"text", "map", "log"}
    key: Optional[str] = None  # map key, only meaningful for map events

    def matches(self, ev: ChangeEvent) -> bool:
        if self.origin is not None and ev.origin != self.origin:
            return False
        if self.kinds is not None and ev.kind not in self.kinds:
            return False
        if self.key is not None and not (ev.kind == "map" and ev.scope[0] == self.key):
            return False
        return True


REMOTE_ONLY = EventFilter(origin="remote")
ALL = EventFilter()


class Subscription:
    def __init__(self, doc: Document, flt: EventFilter, callback: Callable[[ChangeEvent], None]) -> None:
        self.doc = doc
        self.filter = flt
        self.callback = callback
        self.calls = 0
        self.active = True
        doc.add_listener(self._on_event)

    def _on_event(self, ev: ChangeEvent) -> None:
        if self.active and self.filter.matches(ev):
            self.calls += 1
            self.callback(ev)

    def unsubscribe(self) -> None:
        if self.active:
            self.active = False
            self.doc.remove_listener(self._on_event)


def subscribe(doc: Document, flt: EventFilter | None, callback: Callable[[ChangeEvent], None]) -> Subscription:
    return Subscription(doc, flt or ALL, callback)


def unsubscribe(sub: Subscription) -> None:
    sub.unsubscribe()
