"""Relay persistence: an append-only sequence of encoded update packets."""

from __future__ import annotations

import logging
import os
from pathlib import Path

from .frames import FrameType, encode_frame, split_frames

logger = logging.getLogger(__name__)


class MemoryStore:
    def __init__(self) -> None:
        self.records: list[bytes] = []

    def append(self, packet: bytes) -> None:
        self.records.append(bytes(packet))

    def load(self) -> list[bytes]:
        return list(self.records)

    def close(self) -> None:
        pass


class FileStore:
    """One file of concatenated UPDATE frames per document id.

    A torn trailing frame (crash mid-write) is truncated away on open.
    """

    def __init__(self, data_dir: str | os.PathLike, doc_id: str) -> None:
        self.path = Path(data_dir) / f"{doc_id}.ccdt"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.recovered_bytes = 0
        self._records = self._recover()
        self._fh = open(self.path, "ab")

    def _recover(self) -> list[bytes]:
        if not self.path.exists():
            return []
        data = self.path.read_bytes()
        frames, clean = split_frames(data)
        if clean < len(data):
            self.recovered_bytes = len(data) - clean
            logger.warning("truncating %d torn bytes from %s", self.recovered_bytes, self.path)
            with open(self.path, "r+b") as fh:
                fh.truncate(clean)
        return [f.payload for f in frames if f.type == FrameType.UPDATE]

    def append(self, packet: bytes) -> None:
        self._fh.write(encode_frame(FrameType.UPDATE, packet))
        self._fh.flush()
        self._records.append(bytes(packet))

    def load(self) -> list[bytes]:
        return list(self._records)

    def close(self) -> None:
        self._fh.close()
