"""Structured assistant outputs: dialogue acts with typed payloads.

The payload kind is coupled to the act: information requests carry an
InfoNeed, instructions carry debugger steps, hypotheses carry a check step,
fix proposals carry the fix. These are also the schema for what live
backends must emit inside a fenced JSON block.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .conversation import DialogueAct
from .debugctx.model import SourceLocation
from .errors import RejectedAct, ScenarioFormatError


class InfoNeedKind(str, Enum):
    VARIABLE_VALUE = "VariableValue"
    METHOD_SOURCE = "MethodSource"
    OBSERVATION = "Observation"


class StepAction(str, Enum):
    SET_BREAKPOINT = "SetBreakpoint"
    STEP_THROUGH = "StepThrough"
    INSPECT_VARIABLE = "InspectVariable"
    RUN_TO_BREAKPOINT = "RunToBreakpoint"


@dataclass(frozen=True)
class DebuggerStep:
    action: StepAction
    location: SourceLocation | None = None
    variable: str | None = None

    def __post_init__(self):
        needs_location = self.action in (StepAction.SET_BREAKPOINT, StepAction.RUN_TO_BREAKPOINT)
        if needs_location and self.location is None:
            raise RejectedAct(f"{self.action.value} requires a location")
        if self.action is StepAction.INSPECT_VARIABLE and not self.variable:
            raise RejectedAct("InspectVariable requires a variable")

    def to_dict(self) -> dict:
        out: dict = {"action": self.action.value}
        if self.location is not None:
            out["location"] = self.location.to_dict()
        if self.variable is not None:
            out["variable"] = self.variable
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DebuggerStep":
        loc = data.get("location")
        return cls(
            action=StepAction(data["action"]),
            location=SourceLocation.from_dict(loc) if loc else None,
            variable=data.get("variable"),
        )


@dataclass(frozen=True)
class InfoNeed:
    kind: InfoNeedKind
    target: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "target": self.target}


@dataclass(frozen=True)
class Instruction:
    steps: tuple[DebuggerStep, ...]

    def to_dict(self) -> dict:
        return {"steps": [s.to_dict() for s in self.steps]}


@dataclass(frozen=True)
class Hypothesis:
    cause: str
    check: DebuggerStep

    def to_dict(self) -> dict:
        return {"cause": self.cause, "check": self.check.to_dict()}


@dataclass(frozen=True)
class Fix:
    fix_id: str | None
    diff_text: str
    explanation: str

    def to_dict(self) -> dict:
        return {"fix_id": self.fix_id, "diff_text": self.diff_text, "explanation": self.explanation}


Payload = InfoNeed | Instruction | Hypothesis | Fix | None

_ACT_PAYLOAD = {
    DialogueAct.INFO_REQUEST: InfoNeed,
    DialogueAct.INSTRUCTION_STEP: Instruction,
    DialogueAct.HYPOTHESIS_PROPOSAL: Hypothesis,
    DialogueAct.FIX_PROPOSAL: Fix,
}


class FollowupKind(str, Enum):
    ANSWER_CANDIDATE = "AnswerCandidate"
    META_QUESTION = "MetaQuestion"
    NEW_TOPIC = "NewTopic"


@dataclass(frozen=True)
class Followup:
    text: str
    kind: FollowupKind
    anchor_entities: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "kind": self.kind.value,
            "anchor_entities": list(self.anchor_entities),
        }


@dataclass(frozen=True)
class LocalizationClaim:
    function_name: str
    location: SourceLocation

    def to_dict(self) -> dict:
        return {"function_name": self.function_name, "location": self.location.to_dict()}


@dataclass(frozen=True)
class AssistantResponse:
    act: DialogueAct
    body: str
    payload: Payload = None
    followups: tuple[Followup, ...] = ()
    declares_localization: LocalizationClaim | None = None

    def __post_init__(self):
        expected = _ACT_PAYLOAD.get(self.act)
        if expected is None:
            if self.payload is not None:
                raise RejectedAct(f"{self.act.value} takes no payload")
        elif not isinstance(self.payload, expected):
            raise RejectedAct(f"{self.act.value} requires a {expected.__name__} payload")
        if len(self.followups) > 3:
            raise RejectedAct("at most 3 followups per response")

    def with_followups(self, followups: tuple[Followup, ...]) -> "AssistantResponse":
        import dataclasses

        return dataclasses.replace(self, followups=followups)

    def to_dict(self) -> dict:
        payload: dict | None = None
        if self.payload is not None:
            payload = {"type": type(self.payload).__name__, **self.payload.to_dict()}
        return {
            "act": self.act.value,
            "body": self.body,
            "payload": payload,
            "followups": [f.to_dict() for f in self.followups],
            "declares_localization": (
                self.declares_localization.to_dict() if self.declares_localization else None
            ),
        }


def payload_from_dict(act: DialogueAct, data: dict | None) -> Payload:
    """Build the typed payload an act requires from parsed JSON."""
    if data is None:
        return None
    try:
        if act is DialogueAct.INFO_REQUEST:
            return InfoNeed(kind=InfoNeedKind(data["kind"]), target=data["target"])
        if act is DialogueAct.INSTRUCTION_STEP:
            return Instruction(steps=tuple(DebuggerStep.from_dict(s) for s in data["steps"]))
        if act is DialogueAct.HYPOTHESIS_PROPOSAL:
            return Hypothesis(cause=data["cause"], check=DebuggerStep.from_dict(data["check"]))
        if act is DialogueAct.FIX_PROPOSAL:
            return Fix(
                fix_id=data.get("fix_id"),
                diff_text=data.get("diff_text", ""),
                explanation=data.get("explanation", ""),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"bad {act.value} payload: {exc}") from exc
    return None


class ResponderMode(str, Enum):
    ONE_SHOT = "OneShot"
    COLLABORATIVE = "Collaborative"


@dataclass(frozen=True)
class HardnessVerdict:
    mode: ResponderMode
    rationale: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise RejectedAct("confidence must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "rationale": self.rationale,
            "confidence": self.confidence,
        }
