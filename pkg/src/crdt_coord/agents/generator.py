"""Code generators behind one request/response contract.

``ScriptedGenerator`` replays a task script and is what experiments use.
``SubprocessGenerator`` hands the request to an external command, which is
where a model-backed generator would plug in.
"""

from __future__ import annotations

import json
import random
import subprocess
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

from .script import TaskScript


@dataclass(frozen=True)
class GenerationRequest:
    snapshot: str
    key: str
    description: str


@dataclass(frozen=True)
class GenerationResponse:
    body: str
    delay_us: int


class Generator(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResponse: ...


class ScriptedGenerator:
    """Returns the scripted body after the scripted duration.

    With ``jitter > 0`` each duration is multiplied by a seeded lognormal
    factor with that sigma; with the default 0 the output depends only on
    the script and key.
    """

    def __init__(self, script: TaskScript, jitter: float = 0.0, rng: random.Random | None = None) -> None:
        self.script = script
        self.jitter = jitter
        self.rng = rng or random.Random(0)
        self.calls: list[str] = []

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        todo = self.script.todo(request.key)
        self.calls.append(request.key)
        ms = todo.duration_ms
        if self.jitter:
            ms = ms * self.rng.lognormvariate(0.0, self.jitter)
        return GenerationResponse(todo.body, max(1, int(round(ms * 1000))))


class SubprocessGenerator:
    """Runs ``command`` with the request as JSON on stdin.

    The command prints ``{"body": "...", "delayMs": 1234}``; without
    ``delayMs`` the measured wall time is used.
    """

    def __init__(self, command: Sequence[str], timeout_s: float = 300.0) -> None:
        self.command = list(command)
        self.timeout_s = timeout_s

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        payload = json.dumps({"snapshot": request.snapshot, "key": request.key, "description": request.description})
        t0 = time.monotonic()
        proc = subprocess.run(self.command, input=payload, capture_output=True, text=True,
                              timeout=self.timeout_s, check=True)
        elapsed_ms = (time.monotonic() - t0) * 1000
        try:
            out = json.loads(proc.stdout)
            body = str(out["body"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise RuntimeError(f"generator produced malformed output: {exc}") from None
        ms = float(out.get("delayMs", elapsed_ms))
        return GenerationResponse(body, max(1, int(round(ms * 1000))))
