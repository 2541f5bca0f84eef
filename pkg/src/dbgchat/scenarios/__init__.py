"""Bundled bug scenarios and their loader.

A scenario is a self-contained oracle description of a bug: the recorded
debugger state (exception, frames, locals, source excerpts), a breakpoint
observation table, the root cause, the eligible fixes, and scripted
assistant/user behavior that drives deterministic sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from ..errors import ScenarioFormatError, UnknownScenario
from ..debugctx.model import (
    ExceptionRecord,
    SourceLocation,
    StackFrame,
    VariableBinding,
)


class FixKind(str, Enum):
    ROOT_CAUSE_FIX = "RootCauseFix"
    SYMPTOM_PATCH = "SymptomPatch"


@dataclass(frozen=True)
class FixOption:
    id: str
    description: str
    kind: FixKind

    def to_dict(self) -> dict:
        return {"id": self.id, "description": self.description, "kind": self.kind.value}


@dataclass(frozen=True)
class RootCause:
    function_name: str
    location: SourceLocation
    explanation: str

    def to_dict(self) -> dict:
        return {
            "function_name": self.function_name,
            "location": self.location.to_dict(),
            "explanation": self.explanation,
        }


@dataclass(frozen=True)
class Scenario:
    id: str
    title: str
    exception: ExceptionRecord
    frames: tuple[StackFrame, ...]
    breakpoint_observations: dict[SourceLocation, dict[str, VariableBinding]]
    source_excerpts: dict[SourceLocation, str]
    root_cause: RootCause
    eligible_fixes: tuple[FixOption, ...]
    scripted_llm: dict = field(default_factory=dict)
    scripted_user: dict = field(default_factory=dict)

    def fix_by_id(self, fix_id: str | None) -> FixOption | None:
        for fix in self.eligible_fixes:
            if fix.id == fix_id:
                return fix
        return None

    def method_source(self, name: str) -> str | None:
        return self.scripted_user.get("method_sources", {}).get(name)

    def lookup_value(self, identifier: str) -> str | None:
        """The recorded rendered value of an identifier, if any."""
        for bindings in self.breakpoint_observations.values():
            if identifier in bindings:
                return bindings[identifier].rendered_value
        for frame in self.frames:
            for binding in frame.locals:
                if binding.name == identifier:
                    return binding.rendered_value
        return None


def _binding(data: dict) -> VariableBinding:
    return VariableBinding(
        name=data["name"],
        rendered_value=data["rendered_value"],
        value_truncated=bool(data.get("value_truncated", False)),
    )


def scenario_from_dict(data: dict) -> Scenario:
    try:
        frames = tuple(
            StackFrame(
                index=f["index"],
                function_name=f["function_name"],
                location=SourceLocation.from_dict(f["location"]),
                locals=tuple(_binding(v) for v in f.get("locals", [])),
            )
            for f in data["frames"]
        )
        observations = {
            SourceLocation.from_dict(obs["location"]): {
                b["name"]: _binding(b) for b in obs["bindings"]
            }
            for obs in data.get("breakpoint_observations", [])
        }
        excerpts = {
            SourceLocation.from_key(key): text
            for key, text in data.get("source_excerpts", {}).items()
        }
        root = data["root_cause"]
        fixes = tuple(
            FixOption(id=f["id"], description=f["description"], kind=FixKind(f["kind"]))
            for f in data["eligible_fixes"]
        )
        return Scenario(
            id=data["id"],
            title=data.get("title", data["id"]),
            exception=ExceptionRecord.from_dict(data["exception"]),
            frames=frames,
            breakpoint_observations=observations,
            source_excerpts=excerpts,
            root_cause=RootCause(
                function_name=root["function_name"],
                location=SourceLocation.from_dict(root["location"]),
                explanation=root["explanation"],
            ),
            eligible_fixes=fixes,
            scripted_llm=data.get("scripted_llm", {}),
            scripted_user=data.get("scripted_user", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"bad scenario data: {exc}") from exc


def _data_dir():
    return resources.files(__package__) / "data"


def list_scenarios() -> list[Scenario]:
    out = []
    for entry in sorted(_data_dir().iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.append(scenario_from_dict(json.loads(entry.read_text(encoding="utf-8"))))
    return out


def load_scenario(scenario_id: str) -> Scenario:
    entry = _data_dir() / f"{scenario_id}.json"
    try:
        raw = entry.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise UnknownScenario(scenario_id) from exc
    scenario = scenario_from_dict(json.loads(raw))
    if scenario.id != scenario_id:
        raise ScenarioFormatError(f"scenario file {scenario_id}.json declares id {scenario.id}")
    return scenario
