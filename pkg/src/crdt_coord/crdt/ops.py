"""Operation records and the binary ``UpdatePacket`` codec.

Wire layout (all integers little-endian)::

    u32 magic 0x43434454 | u8 version=1 | u32 op_count
    op*:  u8 tag | u64 clock | u64 replica | payload
          tag 1 map-set     str key, str field, value
          tag 2 seq-insert  u64 origin_clock, u64 origin_replica, str content
          tag 3 seq-delete  u64 target_clock, u64 target_replica, u32 length
          tag 4 log-append  str payload
    u32 vector_count | (u64 replica, u64 clock)*

``str`` is a u32 byte length followed by UTF-8. A map value is a u8 kind
(0 null, 1 string, 2 signed 64-bit integer) followed by its body.
"""

from __future__ import annotations

import struct
import functools
from dataclasses import dataclass, field
from typing import NamedTuple, Union

from .ids import BEGIN, BEGIN_REPLICA, OpId, StateVector

MAGIC = 0x43434454
VERSION = 1

TAG_MAP_SET = 1
TAG_SEQ_INSERT = 2
TAG_SEQ_DELETE = 3
TAG_LOG_APPEND = 4

Scalar = Union[str, int, None]

_HEADER = struct.Struct("<IBI")
_OPHEAD = struct.Struct("<BQQ")
_ID = struct.Struct("<QQ")
_U32 = struct.Struct("<I")
_U8 = struct.Struct("<B")
_I64 = struct.Struct("<q")
_PAIR = struct.Struct("<QQ")
_DEL = struct.Struct("<QQI")


class DecodeError(ValueError):
    """Raised when bytes do not form a valid packet or frame."""


class MapSet(NamedTuple):
    id: OpId
    key: str
    field: str
    value: Scalar

    @property
    def last_clock(self) -> int:
        return self.id.clock


class SeqInsert(NamedTuple):
    """Insert a run of characters after ``origin``.

    Character ``i`` of ``content`` has id ``(id.clock + i, id.replica)``.
    """

    id: OpId
    origin: OpId
    content: str

    @property
    def last_clock(self) -> int:
        return self.id.clock + len(self.content) - 1


class SeqDelete(NamedTuple):
    """Tombstone ``length`` characters starting at ``target`` (same replica, consecutive clocks)."""

    id: OpId
    target: OpId
    length: int

    @property
    def last_clock(self) -> int:
        return self.id.clock


class LogAppend(NamedTuple):
    id: OpId
    payload: str

    @property
    def last_clock(self) -> int:
        return self.id.clock


Op = Union[MapSet, SeqInsert, SeqDelete, LogAppend]


def check_scalar(value: object) -> Scalar:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        if not -(2**63) <= value < 2**63:
            raise ValueError(f"integer value out of i64 range: {value}")
        return value
    raise TypeError(f"map values must be str, int or None, not {type(value).__name__}")


@dataclass(frozen=True)
class UpdatePacket:
    ops: tuple[Op, ...] = ()
    sender_vector: StateVector = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def is_empty(self) -> bool:
        return not self.ops

    def encode(self) -> bytes:
        return encode_packet(self)

    @classmethod
    def decode(cls, data: bytes) -> "UpdatePacket":
        return decode_packet(data)


def _put_str(out: list[bytes], s: str) -> None:
    raw = s.encode("utf-8")
    out.append(_U32.pack(len(raw)))
    out.append(raw)


def encode_op(op: Op) -> bytes:
    out: list[bytes] = []
    if isinstance(op, MapSet):
        out.append(_OPHEAD.pack(TAG_MAP_SET, op.id.clock, op.id.replica))
        _put_str(out, op.key)
        _put_str(out, op.field)
        v = op.value
        if v is None:
            out.append(b"\x00")
        elif isinstance(v, str):
            out.append(b"\x01")
            _put_str(out, v)
        else:
            out.append(b"\x02")
            out.append(_I64.pack(v))
    elif isinstance(op, SeqInsert):
        out.append(_OPHEAD.pack(TAG_SEQ_INSERT, op.id.clock, op.id.replica))
        out.append(_ID.pack(op.origin.clock, op.origin.replica))
        _put_str(out, op.content)
    elif isinstance(op, SeqDelete):
        out.append(_OPHEAD.pack(TAG_SEQ_DELETE, op.id.clock, op.id.replica))
        out.append(_ID.pack(op.target.clock, op.target.replica))
        out.append(_U32.pack(op.length))
    elif isinstance(op, LogAppend):
        out.append(_OPHEAD.pack(TAG_LOG_APPEND, op.id.clock, op.id.replica))
        _put_str(out, op.payload)
    else:
        raise TypeError(f"not an operation: {op!r}")
    return b"".join(out)


def encode_vector(vector: StateVector) -> bytes:
    parts = [_U32.pack(len(vector))]
    for replica in sorted(vector):
        parts.append(_PAIR.pack(replica, vector[replica]))
    return b"".join(parts)


def encode_packet(packet: UpdatePacket) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, len(packet.ops))]
    parts.extend(encode_op(op) for op in packet.ops)
    parts.append(encode_vector(packet.sender_vector))
    return b"".join(parts)


class _Cursor:
    """Bounds-checked little-endian reader over a bytes buffer."""

    __slots__ = ("buf", "pos", "end")

    def __init__(self, buf: bytes) -> None:
        self.buf = buf
        self.pos = 0
        self.end = len(buf)

    def need(self, n: int) -> int:
        pos = self.pos
        if pos + n > self.end:
            raise DecodeError("truncated input")
        self.pos = pos + n
        return pos

    def string(self) -> str:
        pos = self.need(4)
        (n,) = _U32.unpack_from(self.buf, pos)
        start = self.need(n)
        try:
            return self.buf[start:start + n].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8: {exc}") from None


def _read_op(c: _Cursor) -> Op:
    buf = c.buf
    tag, clock, replica = _OPHEAD.unpack_from(buf, c.need(17))
    if replica == BEGIN_REPLICA:
        raise DecodeError("operation id uses the reserved BEGIN replica")
    if clock == 0:
        raise DecodeError("operation clock must be >= 1")
    oid = OpId(clock, replica)
    if tag == TAG_MAP_SET:
        key = c.string()
        fld = c.string()
        kind = buf[c.need(1)]
        if kind == 0:
            value: Scalar = None
        elif kind == 1:
            value = c.string()
        elif kind == 2:
            (value,) = _I64.unpack_from(buf, c.need(8))
        else:
            raise DecodeError(f"unknown value kind {kind}")
        return MapSet(oid, key, fld, value)
    if tag == TAG_SEQ_INSERT:
        oc, orr = _ID.unpack_from(buf, c.need(16))
        origin = BEGIN if orr == BEGIN_REPLICA else OpId(oc, orr)
        content = c.string()
        if not content:
            raise DecodeError("empty insert content")
        return SeqInsert(oid, origin, content)
    if tag == TAG_SEQ_DELETE:
        tc, tr, length = _DEL.unpack_from(buf, c.need(20))
        if length == 0 or tc == 0 or tr == BEGIN_REPLICA:
            raise DecodeError("invalid delete target")
        return SeqDelete(oid, OpId(tc, tr), length)
    if tag == TAG_LOG_APPEND:
        return LogAppend(oid, c.string())
    raise DecodeError(f"unknown op tag {tag}")


def _read_vector(c: _Cursor) -> StateVector:
    (count,) = _U32.unpack_from(c.buf, c.need(4))
    start = c.need(16 * count)
    flat = struct.unpack_from(f"<{2 * count}Q", c.buf, start)
    return dict(zip(flat[0::2], flat[1::2]))


def decode_vector(data: bytes) -> StateVector:
    c = _Cursor(bytes(data))
    vector = _read_vector(c)
    if c.pos != c.end:
        raise DecodeError("trailing bytes after state vector")
    return vector


def decode_packet(data: bytes) -> UpdatePacket:
    c = _Cursor(bytes(data))
    magic, version, count = _HEADER.unpack_from(c.buf, c.need(9))
    if magic != MAGIC:
        raise DecodeError(f"bad magic 0x{magic:08x}")
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}")
    ops = tuple([_read_op(c) for _ in range(count)])
    vector = _read_vector(c)
    if c.pos != c.end:
        raise DecodeError("trailing bytes after packet")
    return UpdatePacket(ops, vector)


@functools.lru_cache(maxsize=4096)
def decode_packet_shared(data: bytes) -> UpdatePacket:
    """``decode_packet`` memoized on the raw bytes.

    A relay fans the same bytes out to every live session, so in one process
    the receivers can share one decode. Packets are immutable; callers must
    not mutate ``sender_vector``.
    """
    return decode_packet(data)
