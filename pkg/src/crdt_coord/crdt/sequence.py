"""RGA text sequence stored as character runs.

Each character is addressed by its own ``OpId``; a run is just a stretch of
consecutive ids from one replica that are adjacent in document order. Runs
split whenever an operation needs to address an interior character.

Integration rule for an insert ``X`` after ``origin``: start right after the
origin character and skip every item whose id is greater than ``X.id``. With
Lamport ids everything in the origin's subtree that is newer than ``X`` sits in
that stretch, so concurrent siblings end up ordered newest-first and every
replica derives the same order from the same item set.
"""

from __future__ import annotations

from bisect import bisect_right, insort

from .ids import BEGIN, OpId


class Run:
    __slots__ = ("clock", "replica", "origin", "content", "deleted")

    def __init__(self, clock: int, replica: int, origin: OpId, content: str, deleted: bool = False) -> None:
        self.clock = clock
        self.replica = replica
        self.origin = origin
        self.content = content
        self.deleted = deleted

    @property
    def id(self) -> OpId:
        return OpId(self.clock, self.replica)

    def __repr__(self) -> str:
        mark = "~" if self.deleted else ""
        return f"Run({self.clock}@{self.replica}{mark} {self.content!r})"


class Sequence:
    def __init__(self) -> None:
        self.runs: list[Run] = []
        # replica -> sorted run start clocks, plus (replica, start) -> run
        self._starts: dict[int, list[int]] = {}
        self._by_start: dict[tuple[int, int], Run] = {}
        self._visible_len = 0

    def __len__(self) -> int:
        return self._visible_len

    def text(self) -> str:
        return "".join([r.content for r in self.runs if not r.deleted])

    # -- lookup -----------------------------------------------------------

    def find(self, clock: int, replica: int) -> Run | None:
        """Return the run holding character ``(clock, replica)``."""
        starts = self._starts.get(replica)
        if not starts:
            return None
        i = bisect_right(starts, clock) - 1
        if i < 0:
            return None
        run = self._by_start[(replica, starts[i])]
        if clock < run.clock + len(run.content):
            return run
        return None

    def has_char(self, cid: OpId) -> bool:
        return self.find(cid.clock, cid.replica) is not None

    def has_range(self, start: OpId, length: int) -> OpId | None:
        """Return the first missing character id in the range, or None if all present."""
        clock, replica = start.clock, start.replica
        end = clock + length
        while clock < end:
            run = self.find(clock, replica)
            if run is None:
                return OpId(clock, replica)
            clock = run.clock + len(run.content)
        return None

    def _register(self, run: Run) -> None:
        starts = self._starts.get(run.replica)
        if starts is None:
            self._starts[run.replica] = [run.clock]
        else:
            insort(starts, run.clock)
        self._by_start[(run.replica, run.clock)] = run

    def _split(self, run: Run, offset: int, pos: int | None = None) -> Run:
        """Split ``run`` so its first ``offset`` chars stay put; return the tail run."""
        tail = Run(
            run.clock + offset,
            run.replica,
            OpId(run.clock + offset - 1, run.replica),
            run.content[offset:],
            run.deleted,
        )
        run.content = run.content[:offset]
        if pos is None:
            pos = self.runs.index(run)
        self.runs.insert(pos + 1, tail)
        self._register(tail)
        return tail

    # -- integration ------------------------------------------------------

    def integrate(self, clock: int, replica: int, origin: OpId, content: str) -> int:
        """Place a run; return its visible start index. Origin must be present."""
        runs = self.runs
        if origin == BEGIN:
            pos = 0
        else:
            orun = self.find(origin.clock, origin.replica)
            if orun is None:
                raise KeyError(origin)
            pos = runs.index(orun)
            offset = origin.clock - orun.clock + 1
            if offset < len(orun.content):
                self._split(orun, offset, pos)
            pos += 1
        n = len(runs)
        key = (clock, replica)
        while pos < n:
            nxt = runs[pos]
            if (nxt.clock, nxt.replica) > key:
                pos += 1
            else:
                break
        run = Run(clock, replica, origin, content)
        runs.insert(pos, run)
        self._register(run)
        self._visible_len += len(content)
        return self.visible_index_at(pos)

    def visible_index_at(self, pos: int) -> int:
        total = 0
        for run in self.runs[:pos]:
            if not run.deleted:
                total += len(run.content)
        return total

    def tombstone(self, start: OpId, length: int) -> tuple[int, int] | None:
        """Mark a present id range deleted.

        Returns the hull ``(start, end)`` of the visible positions removed, in
        pre-deletion coordinates, or None when nothing visible changed.
        """
        clock, replica = start.clock, start.replica
        end = clock + length
        touched: list[Run] = []
        while clock < end:
            run = self.find(clock, replica)
            if run is None:
                raise KeyError(OpId(clock, replica))
            if run.clock < clock:
                run = self._split(run, clock - run.clock)
            run_end = run.clock + len(run.content)
            if run_end > end:
                self._split(run, end - run.clock)
            if not run.deleted:
                touched.append(run)
            clock = run.clock + len(run.content)
        if not touched:
            return None
        wanted = set(map(id, touched))
        lo = hi = None
        vis = 0
        for run in self.runs:
            if id(run) in wanted:
                if lo is None:
                    lo = vis
                hi = vis + len(run.content)
            if not run.deleted:
                vis += len(run.content)
        for run in touched:
            run.deleted = True
            self._visible_len -= len(run.content)
        return lo, hi

    # -- visible addressing -----------------------------------------------

    def origin_for_index(self, index: int) -> OpId:
        """Id of the visible character just before ``index`` (BEGIN for 0)."""
        if index == 0:
            return BEGIN
        remaining = index
        for run in self.runs:
            if run.deleted:
                continue
            n = len(run.content)
            if remaining <= n:
                return OpId(run.clock + remaining - 1, run.replica)
            remaining -= n
        raise IndexError(index)

    def visible_ranges(self, index: int, length: int) -> list[tuple[OpId, int]]:
        """Id ranges ``(start, count)`` covering visible ``[index, index+length)``.

        Adjacent runs with consecutive ids from the same replica are merged.
        """
        out: list[list] = []
        skip = index
        need = length
        for run in self.runs:
            if need == 0:
                break
            if run.deleted:
                continue
            n = len(run.content)
            if skip >= n:
                skip -= n
                continue
            take = min(n - skip, need)
            c = run.clock + skip
            if out and out[-1][0].replica == run.replica and out[-1][0].clock + out[-1][1] == c:
                out[-1][1] += take
            else:
                out.append([OpId(c, run.replica), take])
            need -= take
            skip = 0
        return [(s, n) for s, n in out]

    def ids_in_range(self, index: int, length: int) -> list[OpId]:
        ids: list[OpId] = []
        for start, n in self.visible_ranges(index, length):
            ids.extend(OpId(start.clock + i, start.replica) for i in range(n))
        return ids

    def index_of(self, cid: OpId) -> int | None:
        """Visible index of a character, or None if unknown or deleted."""
        target = self.find(cid.clock, cid.replica)
        if target is None or target.deleted:
            return None
        vis = 0
        for run in self.runs:
            if run is target:
                return vis + (cid.clock - run.clock)
            if not run.deleted:
                vis += len(run.content)
        return None  # pragma: no cover

    def is_visible(self, cid: OpId) -> bool:
        run = self.find(cid.clock, cid.replica)
        return run is not None and not run.deleted
