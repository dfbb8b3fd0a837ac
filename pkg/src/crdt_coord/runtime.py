"""Scheduler and transport contracts shared by simulated and real runs.

Time is an integer count of microseconds everywhere below the config layer.
"""

from __future__ import annotations

import asyncio
import time
from typing import Callable, Optional, Protocol

US_PER_S = 1_000_000


def seconds_to_us(seconds: float) -> int:
    return int(round(seconds * US_PER_S))


def us_to_seconds(us: int) -> float:
    return us / US_PER_S


class Timer(Protocol):
    def cancel(self) -> None: ...


class Scheduler(Protocol):
    def now(self) -> int: ...

    def call_later(self, delay_us: int, fn: Callable[..., None], *args) -> Timer: ...


class Channel(Protocol):
    """Bidirectional byte stream. Handlers are assigned by the owner."""

    on_data: Optional[Callable[[bytes], None]]
    on_close: Optional[Callable[[], None]]

    def send(self, data: bytes) -> None: ...

    def close(self) -> None: ...


#: ``connector(done)`` starts a connection attempt and later calls ``done``
#: with a Channel, or with None when the attempt was refused.
Connector = Callable[[Callable[[Optional[Channel]], None]], None]


class AsyncioScheduler:
    """Wall-clock scheduler on an asyncio loop; ``now`` is Unix time in microseconds."""

    def __init__(self, loop: asyncio.AbstractEventLoop | None = None) -> None:
        self.loop = loop or asyncio.get_event_loop()

    def now(self) -> int:
        return int(time.time() * US_PER_S)

    def call_later(self, delay_us: int, fn: Callable[..., None], *args) -> asyncio.TimerHandle:
        return self.loop.call_later(max(delay_us, 0) / US_PER_S, fn, *args)
