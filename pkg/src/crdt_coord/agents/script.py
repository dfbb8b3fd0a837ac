"""Task scripts: a skeleton with work-item markers plus one scripted body per item.

File format (JSON)::

    {
      "name": "pomodoro",
      "coupling": 0.6,
      "outlineMs": 4000,                      # optional, default 0
      "skeleton": "...\\n// TODO(timer): Countdown timer\\n...",
      "todos": [{"key": "timer", "description": "Countdown timer",
                 "body": "export function ...", "durationMs": 7200}]
    }

A marker is a line holding exactly ``// TODO(<key>): <description>``,
optionally indented.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

MARKER_RE = re.compile(r"^[ \t]*// TODO\(([^()\s]+)\): (.*)$", re.MULTILINE)
KEY_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

BUNDLED = ("tic-tac-toe", "registration", "markdown", "pomodoro", "dashboard", "visualizer")


class ScriptError(ValueError):
    pass


def marker_text(key: str, description: str) -> str:
    return f"// TODO({key}): {description}"


@dataclass(frozen=True)
class TodoSpec:
    key: str
    description: str
    body: str
    duration_ms: int

    @property
    def char_count(self) -> int:
        return len(self.body)

    @property
    def marker(self) -> str:
        return marker_text(self.key, self.description)


@dataclass(frozen=True)
class TaskScript:
    name: str
    skeleton: str
    todos: tuple[TodoSpec, ...]
    coupling: float = 0.0
    outline_ms: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "todos", tuple(self.todos))

    @property
    def keys(self) -> list[str]:
        return [t.key for t in self.todos]

    def todo(self, key: str) -> TodoSpec:
        for t in self.todos:
            if t.key == key:
                return t
        raise KeyError(key)

    @property
    def total_chars(self) -> int:
        return sum(t.char_count for t in self.todos)

    @property
    def total_generation_ms(self) -> int:
        return sum(t.duration_ms for t in self.todos)

    def validate(self) -> "TaskScript":
        if not self.name:
            raise ScriptError("script needs a name")
        if not 0.0 <= self.coupling <= 1.0:
            raise ScriptError(f"coupling {self.coupling} outside [0, 1]")
        if self.outline_ms < 0:
            raise ScriptError("outlineMs must be >= 0")
        markers: dict[str, str] = {}
        for m in MARKER_RE.finditer(self.skeleton):
            key, desc = m.group(1), m.group(2)
            if key in markers:
                raise ScriptError(f"marker {key!r} appears twice in the skeleton")
            markers[key] = desc
        seen = set()
        for t in self.todos:
            if not KEY_RE.match(t.key):
                raise ScriptError(f"invalid key {t.key!r}")
            if t.key in seen:
                raise ScriptError(f"duplicate todo {t.key!r}")
            seen.add(t.key)
            if t.key not in markers:
                raise ScriptError(f"todo {t.key!r} has no marker in the skeleton")
            if markers[t.key] != t.description:
                raise ScriptError(f"marker/description mismatch for {t.key!r}: {markers[t.key]!r} != {t.description!r}")
            if t.duration_ms <= 0:
                raise ScriptError(f"todo {t.key!r} needs a positive duration")
            if "\n" in t.description:
                raise ScriptError(f"description of {t.key!r} spans lines")
            if MARKER_RE.search(t.body):
                raise ScriptError(f"body of {t.key!r} contains a marker")
        extra = set(markers) - seen
        if extra:
            raise ScriptError(f"skeleton markers without implementation: {sorted(extra)}")
        return self

    def reference_text(self) -> str:
        """The skeleton with every marker replaced by its body."""
        text = self.skeleton
        for t in self.todos:
            text = text.replace(t.marker, t.body, 1)
        return text

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "coupling": self.coupling,
            "skeleton": self.skeleton,
            "todos": [
                {"key": t.key, "description": t.description, "body": t.body, "durationMs": t.duration_ms}
                for t in self.todos
            ],
        }
        if self.outline_ms:
            d["outlineMs"] = self.outline_ms
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaskScript":
        try:
            todos = tuple(
                TodoSpec(str(t["key"]), str(t["description"]), str(t["body"]), int(t["durationMs"]))
                for t in d["todos"]
            )
            return cls(str(d["name"]), str(d["skeleton"]), todos, float(d.get("coupling", 0.0)),
                       int(d.get("outlineMs", 0))).validate()
        except (KeyError, TypeError) as exc:
            raise ScriptError(f"malformed script: {exc}") from None


def load_script(source: str | Path) -> TaskScript:
    """Load a bundled script by name or a script file by path."""
    if isinstance(source, str) and source in BUNDLED:
        raw = resources.files("crdt_coord").joinpath("scripts", f"{source}.json").read_text(encoding="utf-8")
    else:
        path = Path(source)
        if not path.exists():
            raise ScriptError(f"no such script: {source}")
        raw = path.read_text(encoding="utf-8")
    try:
        return TaskScript.from_dict(json.loads(raw))
    except json.JSONDecodeError as exc:
        raise ScriptError(f"script is not valid JSON: {exc}") from None


def bundled_scripts() -> list[TaskScript]:
    return [load_script(name) for name in BUNDLED]


# -- synthetic scripts -----------------------------------------------------------


def scripted_duration_ms(rng: random.Random, chars: int, median_ms: float = 8000.0, ref_chars: int = 1000,
                         sigma: float = 0.35) -> int:
    """Generation time: lognormal around ``median_ms`` scaled by body length."""
    scale = max(chars, 1) / ref_chars
    return max(1, int(round(median_ms * scale * rng.lognormvariate(0.0, sigma))))


def synthetic_script(rng: random.Random, n_todos: int, coupling: float = 0.0, name: str = "synthetic",
                     duplicates: int = 0) -> TaskScript:
    """Random script with ``n_todos`` markers.

    ``coupling`` is the fraction of bodies that call a function defined by
    another key. ``duplicates`` bodies additionally declare a shared helper,
    which the conflict scan should report.
    """
    if n_todos < 0:
        raise ScriptError("n_todos must be >= 0")
    keys = [f"k{i:02d}" for i in range(n_todos)]
    lines = [f"// {name}: generated skeleton", "import { h } from './runtime';", ""]
    for k in keys:
        lines.append(f"// section {k}")
        lines.append(marker_text(k, f"implement {k}"))
        lines.append("")
    lines.append("export default {};")
    skeleton = "\n".join(lines) + "\n"
    n_coupled = int(round(coupling * n_todos)) if n_todos > 1 else 0
    coupled = set(rng.sample(keys, n_coupled)) if n_coupled else set()
    dup = set(rng.sample(keys, min(duplicates, n_todos))) if duplicates else set()
    todos = []
    for i, k in enumerate(keys):
        stmts = [f"  const v{j} = h('{k}', {rng.randint(0, 999)});" for j in range(rng.randint(1, 6))]
        if k in coupled:
            other = keys[(i + 1 + rng.randrange(n_todos - 1)) % n_todos]
            stmts.append(f"  fn_{other}();")
        body = f"export function fn_{k}() {{\n" + "\n".join(stmts) + "\n}"
        if k in dup:
            body += "\nfunction formatTime(ms) {\n  return `${Math.floor(ms / 1000)}s`;\n}"
        todos.append(TodoSpec(k, f"implement {k}", body, scripted_duration_ms(rng, len(body))))
    return TaskScript(name, skeleton, tuple(todos), coupling).validate()


def coupling_of(script: TaskScript) -> float:
    """Fraction of bodies that use a top-level name declared only by other bodies."""
    from .conflicts import declared_names

    if len(script.todos) < 2:
        return 0.0
    own = {t.key: set(declared_names(t.body)) for t in script.todos}
    count = 0
    for t in script.todos:
        foreign = set().union(*(v for k, v in own.items() if k != t.key)) - own[t.key]
        if foreign & set(re.findall(r"[A-Za-z_$][\w$]*", t.body)):
            count += 1
    return count / len(script.todos)


__all__ = [
    "BUNDLED",
    "MARKER_RE",
    "ScriptError",
    "TaskScript",
    "TodoSpec",
    "bundled_scripts",
    "coupling_of",
    "load_script",
    "marker_text",
    "scripted_duration_ms",
    "synthetic_script",
]

