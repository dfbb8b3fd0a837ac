"""Agent roles, the generator contract, task scripts and the conflict scan."""

from .conflicts import ConflictReport, conflict_scan
from .generator import GenerationRequest, GenerationResponse, ScriptedGenerator, SubprocessGenerator
from .roles import (
    AgentConfig,
    AgentState,
    AgentStats,
    Context,
    OutlineError,
    on_remote_change,
    run_evaluator,
    run_implementer,
    run_outliner,
)
from .script import BUNDLED, ScriptError, TaskScript, TodoSpec, load_script, marker_text, synthetic_script

__all__ = [
    "BUNDLED",
    "AgentConfig",
    "AgentState",
    "AgentStats",
    "ConflictReport",
    "Context",
    "GenerationRequest",
    "GenerationResponse",
    "OutlineError",
    "ScriptError",
    "ScriptedGenerator",
    "SubprocessGenerator",
    "TaskScript",
    "TodoSpec",
    "conflict_scan",
    "load_script",
    "marker_text",
    "on_remote_change",
    "run_evaluator",
    "run_implementer",
    "run_outliner",
    "synthetic_script",
]
