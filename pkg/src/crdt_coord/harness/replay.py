"""Re-run a recorded experiment from its trace header and compare the traces."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..agents.script import TaskScript
from ..simnet.trace import SimTrace, first_difference
from .experiment import ExperimentConfig, RunResult, run_once


class ReplayError(ValueError):
    pass


@dataclass
class ReplayOutcome:
    identical: bool
    first_difference: Optional[int]  # line index, header is line 0
    recorded_lines: int
    replayed_lines: int
    expected: Optional[str] = None
    actual: Optional[str] = None


def rerun(trace: SimTrace) -> RunResult:
    head = trace.header
    if head.get("kind") != "experiment":
        raise ReplayError(f"cannot replay a trace of kind {head.get('kind')!r}")
    try:
        config = ExperimentConfig.from_dict(head["config"])
        script = TaskScript.from_dict(head["script"])
        seed = int(head["seed"])
    except (KeyError, TypeError) as exc:
        raise ReplayError(f"trace header is incomplete: {exc}") from None
    return run_once(config, seed, script, trace=True)


def replay(trace: SimTrace | str | Path) -> ReplayOutcome:
    recorded = trace if isinstance(trace, SimTrace) else SimTrace.load(trace)
    fresh = rerun(recorded).trace
    idx = first_difference(recorded, fresh)
    a, b = recorded.lines(), fresh.lines()
    return ReplayOutcome(
        identical=idx is None,
        first_difference=idx,
        recorded_lines=len(a),
        replayed_lines=len(b),
        expected=a[idx] if idx is not None and idx < len(a) else None,
        actual=b[idx] if idx is not None and idx < len(b) else None,
    )
