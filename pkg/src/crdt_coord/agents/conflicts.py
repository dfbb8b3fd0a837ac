"""Duplicate top-level declaration scan over generated source text."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

# a declaration keyword at column 0, optionally behind modifiers, then a name
DECL_RE = re.compile(
    r"^(?:(?:export|default|declare|async|abstract)\s+)*"
    r"(?:const|let|var|function\*?|class|interface|type|enum)\s+"
    r"([A-Za-z_$][\w$]*)"
)


@dataclass(frozen=True)
class ConflictReport:
    duplicates: tuple[tuple[str, int], ...]
    scanned_at: int = 0
    complete: bool = True

    @property
    def count(self) -> int:
        return len(self.duplicates)

    def to_dict(self) -> dict:
        return {
            "duplicates": [list(d) for d in self.duplicates],
            "scannedAt": self.scanned_at,
            "complete": self.complete,
        }


def declared_names(text: str) -> list[str]:
    names = []
    for line in text.splitlines():
        m = DECL_RE.match(line)
        if m:
            names.append(m.group(1))
    return names


def conflict_scan(text: str, scanned_at: int = 0, complete: bool = True) -> ConflictReport:
    counts = Counter(declared_names(text))
    dups = tuple(sorted((name, n) for name, n in counts.items() if n > 1))
    return ConflictReport(dups, scanned_at, complete)
