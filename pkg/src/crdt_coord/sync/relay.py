"""Relay: holds the authoritative op history for one document and fans out updates.

Per session the protocol is::

    client HELLO(replica, doc)  -> relay SYNC_REQ(relay vector)
    client SYNC_RESP(diff)      -> relay applies, persists, forwards
    client SYNC_REQ(vector)     -> relay SYNC_RESP(diff)
    client UPDATE(packet)       -> relay applies, persists, forwards to other sessions
    client PING(nonce)          -> relay PONG(nonce)

Forwarded packets are the exact bytes received. A session that sends a
malformed frame is closed; other sessions are unaffected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from ..crdt.document import Document
from ..crdt.ops import DecodeError, UpdatePacket, decode_packet_shared
from ..runtime import Channel
from .frames import (
    FrameDecoder,
    FrameType,
    ProtocolError,
    encode_frame,
    parse_hello,
    parse_vector,
    vector_payload,
)
from .store import MemoryStore

logger = logging.getLogger(__name__)

RELAY_REPLICA = 0


@dataclass
class RelaySession:
    sid: int
    channel: Channel
    decoder: FrameDecoder = field(default_factory=FrameDecoder)
    replica: int | None = None
    live: bool = False
    closed: bool = False
    frames_in: int = 0
    frames_out: int = 0


class Relay:
    def __init__(self, doc_id: str = "default", store=None, on_event: Callable[[str, dict], None] | None = None) -> None:
        self.doc_id = doc_id
        self.store = store if store is not None else MemoryStore()
        self.doc = Document(RELAY_REPLICA)
        self.sessions: dict[int, RelaySession] = {}
        self._next_sid = 1
        self._on_event = on_event
        self.packets_received = 0
        self.packets_persisted = 0
        for raw in self.store.load():
            self.doc.apply_update(raw)

    def _event(self, name: str, **detail) -> None:
        if self._on_event is not None:
            self._on_event(name, detail)

    # -- session lifecycle ------------------------------------------------

    def attach(self, channel: Channel) -> RelaySession:
        sess = RelaySession(self._next_sid, channel)
        self._next_sid += 1
        self.sessions[sess.sid] = sess
        channel.on_data = lambda data, s=sess: self._on_data(s, data)
        channel.on_close = lambda s=sess: self._drop(s)
        return sess

    def live_sessions(self) -> list[RelaySession]:
        return [s for s in self.sessions.values() if s.live and not s.closed]

    def close_session(self, sess: RelaySession, reason: str = "") -> None:
        if sess.closed:
            return
        self._drop(sess)
        self._event("session_closed", sid=sess.sid, replica=sess.replica, reason=reason)
        sess.channel.close()

    def _drop(self, sess: RelaySession) -> None:
        sess.closed = True
        sess.live = False
        self.sessions.pop(sess.sid, None)

    def shutdown(self) -> None:
        for sess in list(self.sessions.values()):
            self.close_session(sess, "shutdown")
        self.store.close()

    def _send(self, sess: RelaySession, ftype: FrameType, payload: bytes = b"") -> None:
        if sess.closed:
            return
        sess.frames_out += 1
        sess.channel.send(encode_frame(ftype, payload))

    # -- inbound ----------------------------------------------------------

    def _on_data(self, sess: RelaySession, data: bytes) -> None:
        if sess.closed:
            return
        try:
            frames = sess.decoder.feed(data)
            for frame in frames:
                sess.frames_in += 1
                self._handle(sess, frame.type, frame.payload)
                if sess.closed:
                    return
        except (ProtocolError, DecodeError) as exc:
            logger.info("closing session %s: %s", sess.sid, exc)
            self.close_session(sess, f"protocol error: {exc}")

    def _handle(self, sess: RelaySession, ftype: FrameType, payload: bytes) -> None:
        if ftype == FrameType.HELLO:
            replica, doc_id = parse_hello(payload)
            if doc_id != self.doc_id:
                raise ProtocolError(f"unknown document {doc_id!r}")
            for other in self.live_sessions():
                if other.replica == replica and other is not sess:
                    self.close_session(other, "superseded")
            sess.replica = replica
            sess.live = True
            self._event("hello", sid=sess.sid, replica=replica)
            self._send(sess, FrameType.SYNC_REQ, vector_payload(self.doc.state_vector()))
            return
        if sess.replica is None:
            raise ProtocolError(f"{ftype.name} before HELLO")
        if ftype == FrameType.SYNC_REQ:
            vector = parse_vector(payload)
            self._send(sess, FrameType.SYNC_RESP, self.doc.encode_update_since(vector).encode())
        elif ftype in (FrameType.SYNC_RESP, FrameType.UPDATE):
            self._ingest(sess, payload)
        elif ftype == FrameType.PING:
            self._send(sess, FrameType.PONG, payload)
        elif ftype == FrameType.PONG:
            pass

    def _ingest(self, sess: RelaySession, payload: bytes) -> None:
        packet: UpdatePacket = decode_packet_shared(bytes(payload))
        self.packets_received += 1
        fresh = sum(1 for op in packet.ops if not self.doc.has_op(op.id))
        if not fresh:
            return
        self.doc.apply_update(packet)
        self.store.append(payload)
        self.packets_persisted += 1
        targets = [s for s in self.live_sessions() if s is not sess]
        self._event("forward", sid=sess.sid, ops=len(packet.ops), fresh=fresh, targets=len(targets))
        for other in targets:
            self._send(other, FrameType.UPDATE, payload)
