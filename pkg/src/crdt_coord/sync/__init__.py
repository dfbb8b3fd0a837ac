"""Wire framing, relay fan-out, client sessions and change subscriptions."""

from .client import ClientSession, SessionConfig
from .frames import Frame, FrameDecoder, FrameType, ProtocolError, encode_frame
from .observe import ALL, REMOTE_ONLY, EventFilter, Subscription, subscribe, unsubscribe
from .relay import RELAY_REPLICA, Relay
from .store import FileStore, MemoryStore

__all__ = [
    "ALL",
    "REMOTE_ONLY",
    "RELAY_REPLICA",
    "ClientSession",
    "EventFilter",
    "FileStore",
    "Frame",
    "FrameDecoder",
    "FrameType",
    "MemoryStore",
    "ProtocolError",
    "Relay",
    "SessionConfig",
    "Subscription",
    "encode_frame",
    "subscribe",
    "unsubscribe",
]
