"""Cooperative actors written as generators.

An actor body is a generator that yields commands and receives their results::

    def body(ctx):
        yield Sleep(50_000)            # resumes after 50 ms
        events = yield WaitEvent()      # resumes when notify() is called
        ok = yield WaitAck()            # resumes when ack() is called

The driver only needs a ``Scheduler``, so the same body runs inside the
simulator and under asyncio timers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Generator, Optional

from .runtime import Scheduler, Timer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Sleep:
    us: int


@dataclass(frozen=True)
class WaitEvent:
    """Resume on the next ``notify`` or at absolute time ``deadline`` (whichever first)."""

    deadline: Optional[int] = None


@dataclass(frozen=True)
class WaitAck:
    pass


Body = Generator[Any, Any, Any]


class Actor:
    IDLE = "idle"
    RUNNING = "running"
    SLEEPING = "sleeping"
    WAITING = "waiting"
    ACKING = "acking"
    DONE = "done"
    KILLED = "killed"

    def __init__(
        self,
        name: str,
        body: Body,
        scheduler: Scheduler,
        after_step: Callable[[], None] | None = None,
        request_ack: Callable[[], None] | None = None,
    ) -> None:
        self.name = name
        self._body = body
        self._sched = scheduler
        self._after_step = after_step
        self._request_ack = request_ack
        self._timer: Timer | None = None
        self._notified = False
        self.state = Actor.IDLE
        self.result: Any = None
        self.error: BaseException | None = None
        self.finished_at: int | None = None

    @property
    def alive(self) -> bool:
        return self.state not in (Actor.DONE, Actor.KILLED)

    @property
    def blocked(self) -> bool:
        """Waiting on an event with no timer armed (counts as idle for quiescence)."""
        return self.state == Actor.WAITING and self._timer is None

    def start(self) -> None:
        self._sched.call_later(0, self._step, None)

    def kill(self) -> None:
        if not self.alive:
            return
        self.state = Actor.KILLED
        self._cancel_timer()
        self._body.close()

    def notify(self) -> None:
        """Something changed in the actor's world; wake it if it is waiting."""
        if self.state == Actor.WAITING:
            self._cancel_timer()
            self.state = Actor.RUNNING
            self._sched.call_later(0, self._step, True)
        elif self.alive:
            self._notified = True

    def ack(self, ok: bool = True) -> None:
        if self.state == Actor.ACKING:
            self.state = Actor.RUNNING
            self._sched.call_later(0, self._step, ok)

    def _cancel_timer(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None

    def _wake(self, value: Any) -> None:
        self._timer = None
        if self.state in (Actor.SLEEPING, Actor.WAITING):
            self._step(value)

    def _step(self, value: Any) -> None:
        if not self.alive:
            return
        self.state = Actor.RUNNING
        try:
            cmd = self._body.send(value)
        except StopIteration as stop:
            self.result = stop.value
            self._finish()
            return
        except Exception as exc:  # noqa: BLE001 - actor failures are recorded, not propagated
            logger.exception("actor %s failed", self.name)
            self.error = exc
            self._finish()
            return
        if self._after_step is not None:
            self._after_step()
        self._dispatch(cmd)

    def _finish(self) -> None:
        self.state = Actor.DONE
        self.finished_at = self._sched.now()
        if self._after_step is not None:
            self._after_step()

    def _dispatch(self, cmd: Any) -> None:
        if isinstance(cmd, Sleep):
            self.state = Actor.SLEEPING
            self._timer = self._sched.call_later(max(cmd.us, 0), self._wake, None)
        elif isinstance(cmd, WaitEvent):
            if self._notified:
                self._notified = False
                self._sched.call_later(0, self._step, True)
                return
            self.state = Actor.WAITING
            if cmd.deadline is not None:
                delay = max(cmd.deadline - self._sched.now(), 0)
                self._timer = self._sched.call_later(delay, self._wake, False)
        elif isinstance(cmd, WaitAck):
            if self._request_ack is None:
                self._sched.call_later(0, self._step, False)
                return
            self.state = Actor.ACKING
            self._request_ack()
        else:
            raise TypeError(f"actor {self.name} yielded unknown command {cmd!r}")
