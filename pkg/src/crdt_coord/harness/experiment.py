"""One experiment run: outliner, implementers and evaluator on a simulated relay."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from ..agents.generator import ScriptedGenerator
from ..agents.roles import (
    EVALUATOR,
    IMPLEMENTER,
    OUTLINER,
    AgentConfig,
    AgentState,
    Context,
    on_remote_change,
    run_evaluator,
    run_implementer,
    run_outliner,
)
from ..agents.script import TaskScript, load_script
from ..claims import ClaimOutcome, ProtocolConfig
from ..runtime import US_PER_S, us_to_seconds
from ..simnet.latency import LatencyModel
from ..simnet.network import FaultPlan
from ..simnet.trace import SimTrace
from ..simnet.world import SimNode, SimWorld
from .stats import normalized_time

logger = logging.getLogger(__name__)

MODES = {"seq": "sequential", "sequential": "sequential", "par": "parallel", "parallel": "parallel"}

CSV_COLUMNS = (
    "task", "mode", "seed", "response_s", "chars", "s_per_kchar", "callbacks",
    "claims_lost", "transient_double_won", "converged", "duplicates",
)
EXTRA_COLUMNS = ("claims_attempted", "evaluator_s", "completed", "quiescent")


@dataclass(frozen=True)
class ExperimentConfig:
    script: str = "tic-tac-toe"
    mode: str = "parallel"
    agents: int = 5
    runs: int = 50
    base_seed: int = 0
    latency_median_ms: float = 50.0
    latency_p95_ms: float = 200.0
    apply_ms: float = 0.0
    per_op_us: int = 0
    sync_delay_ms: float = 50.0
    stale_timeout_s: float = 120.0
    verify_mode: str = "delay"
    backoff_ms: float = 100.0
    evaluator_scan_ms: float = 0.0
    evaluator_timeout_s: Optional[float] = None
    duration_jitter: float = 0.0
    time_cap_s: float = 3600.0
    max_agents: int = 5
    faults: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        mode = MODES.get(self.mode)
        if mode is None:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 1 <= self.agents <= self.max_agents:
            raise ValueError(f"agents must be in 1..{self.max_agents}")

    @property
    def implementers(self) -> int:
        return 1 if self.mode == "sequential" else self.agents

    def latency(self) -> LatencyModel:
        return LatencyModel(int(round(self.latency_median_ms * 1000)), int(round(self.latency_p95_ms * 1000)))

    def protocol(self) -> ProtocolConfig:
        return ProtocolConfig(
            sync_delay_us=int(round(self.sync_delay_ms * 1000)),
            stale_timeout_us=int(round(self.stale_timeout_s * US_PER_S)),
            verify_mode=self.verify_mode,
        )

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            protocol=self.protocol(),
            backoff_us=int(round(self.backoff_ms * 1000)),
            evaluator_timeout_us=None if self.evaluator_timeout_s is None else int(self.evaluator_timeout_s * US_PER_S),
            evaluator_scan_us=int(round(self.evaluator_scan_ms * 1000)),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


@dataclass
class RunRecord:
    task: str
    mode: str
    seed: int
    response_s: float
    chars: int
    s_per_kchar: Optional[float]
    callbacks: int
    claims_lost: int
    transient_double_won: int
    converged: bool
    duplicates: int
    claims_attempted: int = 0
    evaluator_s: float = 0.0
    completed: bool = True
    quiescent: bool = True

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS + EXTRA_COLUMNS}


@dataclass
class RunResult:
    record: RunRecord
    world: SimWorld
    states: dict[str, AgentState]
    claims: list[tuple[int, int, str, ClaimOutcome]]

    @property
    def trace(self) -> SimTrace:
        return self.world.sim.trace

    def text(self) -> str:
        return self.world.nodes["evaluator"].doc.text_read()


def transient_double_won(claim_log) -> int:
    """Keys for which more than one replica was told it won."""
    winners: dict[str, set[int]] = defaultdict(set)
    for _, replica, key, outcome in claim_log:
        if outcome.won:
            winners[key].add(replica)
    return sum(1 for reps in winners.values() if len(reps) > 1)


def build_world(config: ExperimentConfig, seed: int, script: TaskScript, *, trace: bool = False,
                faults: FaultPlan | None = None) -> tuple[SimWorld, dict[str, AgentState], list]:
    acfg = config.agent_config()
    faults = faults if faults is not None else FaultPlan.from_dict(config.faults)
    world = SimWorld(
        seed,
        config.latency(),
        faults,
        apply_us=int(round(config.apply_ms * 1000)),
        per_op_us=config.per_op_us,
        trace=trace,
        header={"kind": "experiment", "config": config.to_dict(), "seed": seed, "script": script.to_dict()},
    )
    states: dict[str, AgentState] = {}
    claim_log: list = []

    def context(node: SimNode) -> Context:
        sink = None
        if node.name.startswith("impl"):
            def sink(*entry):
                claim_log.append(entry)
        return Context(node.doc, node.now, node.record, sink)

    n = config.implementers
    states["outliner"] = AgentState(OUTLINER, 1)
    world.add_node("outliner", 1, lambda node: run_outliner(context(node), script, states["outliner"]))
    for i in range(n):
        name, replica = f"impl-{i + 1}", 2 + i
        state = states[name] = AgentState(IMPLEMENTER, replica)
        gen = ScriptedGenerator(script, config.duration_jitter, world.rng_for(name))
        node = world.add_node(name, replica, lambda nd, g=gen, st=state: run_implementer(context(nd), g, acfg, st))
        node.on_remote = lambda ev, nd=node, st=state: on_remote_change(st, nd.doc, ev, nd.now(), acfg, nd.record)
    states["evaluator"] = AgentState(EVALUATOR, n + 2)
    world.add_node("evaluator", n + 2,
                   lambda node: run_evaluator(context(node), len(script.todos), acfg, states["evaluator"]))
    return world, states, claim_log


def run_once(config: ExperimentConfig, seed: int, script: TaskScript | None = None, *, trace: bool = False,
             faults: FaultPlan | None = None) -> RunResult:
    script = script or load_script(config.script)
    world, states, claim_log = build_world(config, seed, script, trace=trace, faults=faults)
    world.run(until_us=int(config.time_cap_s * US_PER_S))
    quiescent = world.sim.trace.quiescent

    ev_node = world.nodes["evaluator"]
    ev_state = states["evaluator"]
    report = ev_state.report
    finished = ev_node.actor.finished_at if ev_node.actor is not None and report is not None else None
    response_s = us_to_seconds(finished) if finished is not None else float("nan")
    text = ev_node.doc.text_read()
    chars = len(text)
    impl = [s for s in states.values() if s.role == IMPLEMENTER]
    record = RunRecord(
        task=script.name,
        mode=config.mode,
        seed=seed,
        response_s=response_s,
        chars=chars,
        s_per_kchar=normalized_time(response_s, chars).value if chars and finished is not None else None,
        callbacks=world.callbacks(),
        claims_lost=sum(s.stats.claims_lost for s in impl),
        transient_double_won=transient_double_won(claim_log),
        converged=quiescent and world.converged(),
        duplicates=report.count if report is not None else 0,
        claims_attempted=sum(s.stats.claims_attempted for s in impl),
        evaluator_s=us_to_seconds(finished - ev_state.ready_at) if finished is not None and ev_state.ready_at else 0.0,
        completed=bool(report is not None and report.complete),
        quiescent=quiescent,
    )
    return RunResult(record, world, states, claim_log)


def run_experiment(config: ExperimentConfig, script: TaskScript | None = None) -> list[RunRecord]:
    script = script or load_script(config.script)
    records = []
    for i in range(config.runs):
        seed = config.base_seed + i
        rec = run_once(config, seed, script).record
        if not rec.converged:
            logger.warning("run %s/%s seed %d did not converge", script.name, config.mode, seed)
        records.append(rec)
    return records
