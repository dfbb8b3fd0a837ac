"""TCP transport for the relay and client sessions on an asyncio loop."""

from __future__ import annotations

import asyncio
import logging
from typing import Callable, Optional

from ..runtime import Channel, Connector
from .relay import Relay

logger = logging.getLogger(__name__)


class StreamChannel(asyncio.Protocol):
    """Adapts an asyncio transport to the ``Channel`` contract."""

    def __init__(self, on_open: Callable[["StreamChannel"], None] | None = None) -> None:
        self.on_data: Optional[Callable[[bytes], None]] = None
        self.on_close: Optional[Callable[[], None]] = None
        self._on_open = on_open
        self._transport: asyncio.Transport | None = None
        self._closed = False

    def connection_made(self, transport: asyncio.BaseTransport) -> None:
        self._transport = transport  # type: ignore[assignment]
        if self._on_open is not None:
            self._on_open(self)

    def data_received(self, data: bytes) -> None:
        if self.on_data is not None:
            self.on_data(data)

    def connection_lost(self, exc: Exception | None) -> None:
        if self._closed:
            return
        self._closed = True
        if self.on_close is not None:
            self.on_close()

    def send(self, data: bytes) -> None:
        if self._transport is not None and not self._closed:
            self._transport.write(data)

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            if self._transport is not None:
                self._transport.close()


async def serve_relay(relay: Relay, host: str = "127.0.0.1", port: int = 0) -> asyncio.base_events.Server:
    loop = asyncio.get_running_loop()
    server = await loop.create_server(lambda: StreamChannel(relay.attach), host, port)
    addrs = ", ".join(str(s.getsockname()) for s in server.sockets)
    logger.info("relay serving %r on %s", relay.doc_id, addrs)
    return server


def tcp_connector(host: str, port: int, loop: asyncio.AbstractEventLoop | None = None) -> Connector:
    loop = loop or asyncio.get_event_loop()

    def connect(done: Callable[[Optional[Channel]], None]) -> None:
        async def attempt() -> None:
            try:
                _, proto = await loop.create_connection(StreamChannel, host, port)
            except OSError as exc:
                logger.info("connect to %s:%s failed: %s", host, port, exc)
                done(None)
                return
            done(proto)

        loop.create_task(attempt())

    return connect
