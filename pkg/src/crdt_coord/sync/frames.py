"""Length-prefixed frames: ``u32 length | u8 type | payload``.

``length`` counts the type byte plus the payload, little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from ..crdt.ids import StateVector
from ..crdt.ops import DecodeError, decode_vector, encode_vector

_LEN = struct.Struct("<I")
_HELLO = struct.Struct("<Q")

#: Upper bound on a single frame; larger lengths are treated as corruption.
MAX_FRAME = 64 * 1024 * 1024


class FrameType(IntEnum):
    HELLO = 1
    SYNC_REQ = 2
    SYNC_RESP = 3
    UPDATE = 4
    PING = 5
    PONG = 6


class ProtocolError(DecodeError):
    pass


@dataclass(frozen=True)
class Frame:
    type: FrameType
    payload: bytes = b""

    def encode(self) -> bytes:
        return _LEN.pack(len(self.payload) + 1) + bytes((self.type,)) + self.payload


def encode_frame(ftype: FrameType, payload: bytes = b"") -> bytes:
    return _LEN.pack(len(payload) + 1) + bytes((ftype,)) + payload


def _parse(ftype: int, payload: bytes) -> Frame:
    try:
        return Frame(FrameType(ftype), payload)
    except ValueError:
        raise ProtocolError(f"unknown frame type {ftype}") from None


class FrameDecoder:
    """Incremental decoder for a byte stream."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        self._buf += data
        frames = []
        buf = self._buf
        pos = 0
        while len(buf) - pos >= 4:
            (length,) = _LEN.unpack_from(buf, pos)
            if length == 0 or length > MAX_FRAME:
                raise ProtocolError(f"bad frame length {length}")
            if len(buf) - pos - 4 < length:
                break
            ftype = buf[pos + 4]
            payload = bytes(buf[pos + 5:pos + 4 + length])
            pos += 4 + length
            frames.append(_parse(ftype, payload))
        if pos:
            del buf[:pos]
        return frames

    @property
    def buffered(self) -> int:
        return len(self._buf)


def split_frames(data: bytes) -> tuple[list[Frame], int]:
    """Decode whole frames from ``data``; return them and the clean-prefix length.

    Stops at the first torn or corrupt frame instead of raising.
    """
    frames = []
    pos = 0
    n = len(data)
    while n - pos >= 4:
        (length,) = _LEN.unpack_from(data, pos)
        if length == 0 or length > MAX_FRAME or n - pos - 4 < length:
            break
        try:
            frames.append(_parse(data[pos + 4], bytes(data[pos + 5:pos + 4 + length])))
        except ProtocolError:
            break
        pos += 4 + length
    return frames, pos


# -- payloads ---------------------------------------------------------------


def hello_payload(replica: int, doc_id: str) -> bytes:
    raw = doc_id.encode("utf-8")
    return _HELLO.pack(replica) + _LEN.pack(len(raw)) + raw


def parse_hello(payload: bytes) -> tuple[int, str]:
    if len(payload) < 12:
        raise ProtocolError("short HELLO")
    (replica,) = _HELLO.unpack_from(payload, 0)
    (n,) = _LEN.unpack_from(payload, 8)
    if len(payload) != 12 + n:
        raise ProtocolError("bad HELLO length")
    try:
        return replica, payload[12:].decode("utf-8")
    except UnicodeDecodeError:
        raise ProtocolError("bad HELLO doc id") from None


def vector_payload(vector: StateVector) -> bytes:
    return encode_vector(vector)


def parse_vector(payload: bytes) -> StateVector:
    return decode_vector(payload)
