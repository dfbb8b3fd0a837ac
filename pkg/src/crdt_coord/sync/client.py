"""Client side of the sync protocol: handshake, outbox flushing and reconnect.

The session never blocks. A connection attempt is started through a
``Connector``; the transport later calls back with a channel or None.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from typing import Callable, Optional

from ..crdt.document import Document
from ..crdt.ops import DecodeError
from ..runtime import US_PER_S, Channel, Connector, Scheduler, Timer
from .frames import (
    FrameDecoder,
    FrameType,
    ProtocolError,
    encode_frame,
    hello_payload,
    parse_vector,
    vector_payload,
)

logger = logging.getLogger(__name__)

_NONCE = struct.Struct("<Q")


@dataclass(frozen=True)
class SessionConfig:
    sync_timeout_us: int = 15 * US_PER_S
    backoff_base_us: int = 1 * US_PER_S
    backoff_factor: int = 2
    backoff_cap_us: int = 30 * US_PER_S
    max_attempts: int = 5

    def backoff(self, attempt: int) -> int:
        """Delay before reconnect attempt ``attempt`` (0-based)."""
        return min(self.backoff_base_us * self.backoff_factor ** attempt, self.backoff_cap_us)


class ClientSession:
    CONNECTING = "connecting"
    HANDSHAKING = "handshaking"
    LIVE = "live"
    RECONNECTING = "reconnecting"
    FAILED = "failed"
    CLOSED = "closed"

    def __init__(
        self,
        doc: Document,
        connector: Connector,
        scheduler: Scheduler,
        doc_id: str = "default",
        config: SessionConfig | None = None,
        on_state: Callable[[str, int], None] | None = None,
    ) -> None:
        self.doc = doc
        self.doc_id = doc_id
        self.config = config or SessionConfig()
        self._connector = connector
        self._sched = scheduler
        self._on_state = on_state
        self.state = ClientSession.CLOSED
        self.attempts = 0  # reconnect attempts since the last live period
        self.attempt_times: list[int] = []  # every connection attempt, initial one included
        self._channel: Channel | None = None
        self._decoder = FrameDecoder()
        self._timer: Timer | None = None
        self._generation = 0
        self._nonce = 0
        self._pings: dict[int, Callable[[bool], None]] = {}
        self.updates_sent = 0
        self.updates_received = 0

    @property
    def live(self) -> bool:
        return self.state == ClientSession.LIVE

    def _set_state(self, state: str) -> None:
        if state != self.state:
            self.state = state
            if self._on_state is not None:
                self._on_state(state, self._sched.now())

    # -- connection lifecycle ----------------------------------------------

    def start(self) -> None:
        self.attempts = 0
        self._attempt()

    def _attempt(self) -> None:
        self._generation += 1
        gen = self._generation
        self._timer = None
        self.attempt_times.append(self._sched.now())
        self._set_state(ClientSession.CONNECTING)
        self._connector(lambda ch: self._connected(gen, ch))

    def _connected(self, gen: int, channel: Optional[Channel]) -> None:
        if gen != self._generation or self.state in (ClientSession.CLOSED, ClientSession.FAILED):
            if channel is not None:
                channel.close()
            return
        if channel is None:
            self._retry("refused")
            return
        self._channel = channel
        self._decoder = FrameDecoder()
        channel.on_data = lambda data, g=gen: self._on_data(g, data)
        channel.on_close = lambda g=gen: self._on_close(g)
        self._set_state(ClientSession.HANDSHAKING)
        self._timer = self._sched.call_later(self.config.sync_timeout_us, self._handshake_timeout, gen)
        self._send(FrameType.HELLO, hello_payload(self.doc.replica, self.doc_id))

    def _handshake_timeout(self, gen: int) -> None:
        if gen == self._generation and self.state == ClientSession.HANDSHAKING:
            self._timer = None
            logger.info("replica %s: handshake timed out", self.doc.replica)
            self._drop_channel()
            self._retry("timeout")

    def _on_close(self, gen: int) -> None:
        if gen != self._generation or self.state in (ClientSession.CLOSED, ClientSession.FAILED):
            return
        self._channel = None
        self._retry("closed")

    def _retry(self, reason: str) -> None:
        self._cancel_timer()
        self._fail_pings()
        self._generation += 1
        if self.attempts >= self.config.max_attempts:
            logger.warning("replica %s: giving up after %d attempts (%s)", self.doc.replica, self.attempts, reason)
            self._set_state(ClientSession.FAILED)
            return
        delay = self.config.backoff(self.attempts)
        self.attempts += 1
        self._set_state(ClientSession.RECONNECTING)
        self._timer = self._sched.call_later(delay, self._attempt)

    def _cancel_timer(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None

    def _drop_channel(self) -> None:
        ch, self._channel = self._channel, None
        if ch is not None:
            ch.on_data = None
            ch.on_close = None
            ch.close()

    def disconnect(self) -> None:
        """Drop the current connection and go through the reconnect path."""
        if self._channel is None:
            return  # nothing to drop; a pending attempt or retry already owns the schedule
        self._drop_channel()
        self._retry("disconnect")

    def close(self) -> None:
        self._cancel_timer()
        self._fail_pings()
        self._generation += 1
        self._drop_channel()
        self._set_state(ClientSession.CLOSED)

    # -- outbound ------------------------------------------------------------

    def _send(self, ftype: FrameType, payload: bytes = b"") -> None:
        if self._channel is not None:
            self._channel.send(encode_frame(ftype, payload))

    def broadcast_local(self) -> bool:
        """Send pending local ops as one UPDATE frame; buffered while not live."""
        if not self.live or not self.doc.has_outbox():
            return False
        self._send(FrameType.UPDATE, self.doc.take_outbox().encode())
        self.updates_sent += 1
        return True

    def ping(self, callback: Callable[[bool], None]) -> None:
        """Round-trip through the relay; ``callback(True)`` once every earlier frame was processed."""
        if not self.live:
            callback(False)
            return
        self._nonce += 1
        self._pings[self._nonce] = callback
        self._send(FrameType.PING, _NONCE.pack(self._nonce))

    def _fail_pings(self) -> None:
        pending, self._pings = self._pings, {}
        for cb in pending.values():
            cb(False)

    # -- inbound ---------------------------------------------------------------

    def _on_data(self, gen: int, data: bytes) -> None:
        if gen != self._generation:
            return
        try:
            for frame in self._decoder.feed(data):
                self._handle(frame.type, frame.payload)
                if gen != self._generation:
                    return
        except (ProtocolError, DecodeError) as exc:
            logger.warning("replica %s: bad frame from relay: %s", self.doc.replica, exc)
            self._drop_channel()
            self._retry("protocol error")

    def _handle(self, ftype: FrameType, payload: bytes) -> None:
        if ftype == FrameType.SYNC_REQ:
            remote = parse_vector(payload)
            self._send(FrameType.SYNC_RESP, self.doc.encode_update_since(remote).encode())
            # everything local is now covered by that response
            self.doc.clear_outbox()
            self._send(FrameType.SYNC_REQ, vector_payload(self.doc.state_vector()))
        elif ftype == FrameType.SYNC_RESP:
            self.doc.apply_update(payload)
            if self.state == ClientSession.HANDSHAKING:
                self._cancel_timer()
                self.attempts = 0
                self._set_state(ClientSession.LIVE)
                self.broadcast_local()
        elif ftype == FrameType.UPDATE:
            self.updates_received += 1
            self.doc.apply_update(payload)
            # edits made by change callbacks have no actor step to flush them
            self.broadcast_local()
        elif ftype == FrameType.PONG:
            if len(payload) == _NONCE.size:
                cb = self._pings.pop(_NONCE.unpack(payload)[0], None)
                if cb is not None:
                    cb(True)
        elif ftype == FrameType.PING:
            self._send(FrameType.PONG, payload)
        else:
            raise ProtocolError(f"unexpected {ftype.name} from relay")
