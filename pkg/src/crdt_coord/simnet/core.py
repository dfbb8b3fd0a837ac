"""Discrete-event core: a virtual clock and a (time, sequence) ordered queue."""

from __future__ import annotations

import heapq
import logging
from typing import Callable

from .trace import SimTrace

logger = logging.getLogger(__name__)


class Handle:
    __slots__ = ("when", "cancelled")

    def __init__(self, when: int) -> None:
        self.when = when
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Simulator:
    """Single-threaded scheduler over virtual microseconds.

    Events scheduled for the same instant run in insertion order.
    """

    def __init__(self, trace: SimTrace | None = None) -> None:
        self._now = 0
        self._seq = 0
        self._queue: list[tuple[int, int, Handle, Callable[..., None], tuple]] = []
        self.trace = trace if trace is not None else SimTrace()
        self.events_run = 0

    def now(self) -> int:
        return self._now

    def call_at(self, when: int, fn: Callable[..., None], *args) -> Handle:
        when = max(int(when), self._now)
        handle = Handle(when)
        heapq.heappush(self._queue, (when, self._seq, handle, fn, args))
        self._seq += 1
        return handle

    def call_later(self, delay_us: int, fn: Callable[..., None], *args) -> Handle:
        return self.call_at(self._now + max(int(delay_us), 0), fn, *args)

    def _prune(self) -> None:
        q = self._queue
        while q and q[0][2].cancelled:
            heapq.heappop(q)

    @property
    def idle(self) -> bool:
        self._prune()
        return not self._queue

    def next_time(self) -> int | None:
        self._prune()
        return self._queue[0][0] if self._queue else None

    def step(self) -> bool:
        self._prune()
        if not self._queue:
            return False
        when, _, handle, fn, args = heapq.heappop(self._queue)
        self._now = when
        self.events_run += 1
        fn(*args)
        return True

    def run(self, until: int | None = None, stop: Callable[[], bool] | None = None) -> bool:
        """Run until the queue drains (returns True) or ``until`` passes (returns False).

        ``stop`` is checked after every event and ends the run early (returns True).
        """
        q = self._queue
        while True:
            while q and q[0][2].cancelled:
                heapq.heappop(q)
            if not q:
                return True
            when = q[0][0]
            if until is not None and when > until:
                self._now = max(self._now, until)
                return False
            _, _, handle, fn, args = heapq.heappop(q)
            self._now = when
            self.events_run += 1
            fn(*args)
            if stop is not None and stop():
                return True

    def record(self, actor: str, event: str, **detail) -> None:
        self.trace.add(self._now, actor, event, detail)
