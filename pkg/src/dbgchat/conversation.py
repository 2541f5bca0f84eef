"""Turn-taking state machine: a base adjacency pair with nested insert expansions.

A session is one base question-answer pair (the user's primary request and
whatever finally answers it) plus a stack of auxiliary exchanges (insert
expansions) opened in between. An assistant information request or debugger
instruction opens an insert; the user's information provision closes it; a
user meta-question ("how do I find that?") nests another insert on top, and
the assistant's answer closes that one. Frames close strictly LIFO and the
base pair always closes last.

Every operation is pure: it returns a new state and never mutates its input.
Speakers strictly alternate after the opening request.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

from .errors import (
    DepthExceeded,
    IllegalPhaseJump,
    IllegalTransition,
    OpenInsertsRemain,
    RejectedAct,
)

DEFAULT_MAX_DEPTH = 4


class Speaker(str, Enum):
    USER = "User"
    ASSISTANT = "Assistant"


class Origin(str, Enum):
    TYPED = "Typed"
    FOLLOWUP_CLICK = "FollowupClick"


class DialogueAct(str, Enum):
    PRIMARY_REQUEST = "PrimaryRequest"
    ANSWER = "Answer"
    INFO_REQUEST = "InfoRequest"
    INSTRUCTION_STEP = "InstructionStep"
    HYPOTHESIS_PROPOSAL = "HypothesisProposal"
    FIX_PROPOSAL = "FixProposal"
    INFO_PROVISION = "InfoProvision"
    META_QUESTION = "MetaQuestion"
    ACKNOWLEDGEMENT = "Acknowledgement"


USER_ACTS = frozenset(
    {
        DialogueAct.PRIMARY_REQUEST,
        DialogueAct.INFO_PROVISION,
        DialogueAct.META_QUESTION,
        DialogueAct.ACKNOWLEDGEMENT,
    }
)

ASSISTANT_ACTS = frozenset(
    {
        DialogueAct.ANSWER,
        DialogueAct.INFO_REQUEST,
        DialogueAct.INSTRUCTION_STEP,
        DialogueAct.HYPOTHESIS_PROPOSAL,
        DialogueAct.FIX_PROPOSAL,
    }
)

# Acts that open an insert expansion when spoken by the assistant.
INSERT_OPENING_ACTS = frozenset({DialogueAct.INFO_REQUEST, DialogueAct.INSTRUCTION_STEP})


class FrameKind(str, Enum):
    BASE_PAIR = "BasePair"
    INSERT_EXPANSION = "InsertExpansion"


class FrameStatus(str, Enum):
    OPEN = "Open"
    CLOSED = "Closed"


class DebugPhase(str, Enum):
    IDENTIFICATION = "Identification"
    LOCALIZATION = "Localization"
    COMPREHENSION = "Comprehension"
    FIXING = "Fixing"
    DONE = "Done"


_PHASE_ORDER = {
    DebugPhase.IDENTIFICATION: 0,
    DebugPhase.LOCALIZATION: 1,
    DebugPhase.COMPREHENSION: 2,
    DebugPhase.FIXING: 3,
}


class PatternMode(str, Enum):
    UNSET = "Unset"
    EAGER_QA = "EagerQA"
    COLLABORATIVE_IE = "CollaborativeIE"


class PhaseEvidence(str, Enum):
    EXCEPTION_UNDERSTOOD = "ExceptionUnderstood"
    ROOT_FRAME_NAMED = "RootFrameNamed"
    CAUSE_EXPLAINED = "CauseExplained"
    # Backward edge: after comprehension the developer may suspect a deeper
    # cause and return to localization.
    DEEPER_CAUSE_SUSPECTED = "DeeperCauseSuspected"


_EVIDENCE_TARGET = {
    PhaseEvidence.EXCEPTION_UNDERSTOOD: DebugPhase.LOCALIZATION,
    PhaseEvidence.ROOT_FRAME_NAMED: DebugPhase.COMPREHENSION,
    PhaseEvidence.CAUSE_EXPLAINED: DebugPhase.FIXING,
}


@dataclass(frozen=True)
class Utterance:
    speaker: Speaker
    text: str
    act: DialogueAct
    turn_index: int
    origin: Origin = Origin.TYPED

    def __post_init__(self):
        if self.turn_index < 0:
            raise RejectedAct("turn_index must be non-negative")
        if self.speaker is Speaker.USER and self.act not in USER_ACTS:
            raise RejectedAct(f"{self.act.value} is not a user act")
        if self.speaker is Speaker.ASSISTANT and self.act not in ASSISTANT_ACTS:
            raise RejectedAct(f"{self.act.value} is not an assistant act")
        if self.origin is Origin.FOLLOWUP_CLICK and self.speaker is not Speaker.USER:
            raise RejectedAct("origin=FollowupClick is only valid for user turns")

    def to_dict(self) -> dict:
        return {
            "speaker": self.speaker.value,
            "text": self.text,
            "act": self.act.value,
            "turn_index": self.turn_index,
            "origin": self.origin.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Utterance":
        return cls(
            speaker=Speaker(data["speaker"]),
            text=data["text"],
            act=DialogueAct(data["act"]),
            turn_index=data["turn_index"],
            origin=Origin(data.get("origin", "Typed")),
        )


@dataclass(frozen=True)
class SequenceFrame:
    kind: FrameKind
    opener_turn: int
    opener_act: DialogueAct
    status: FrameStatus = FrameStatus.OPEN
    closer_turn: int | None = None

    @property
    def opened_by_assistant(self) -> bool:
        return self.opener_act in ASSISTANT_ACTS

    def closed_at(self, turn: int) -> "SequenceFrame":
        if turn <= self.opener_turn:
            raise IllegalTransition("closer-order", "closer_turn must exceed opener_turn")
        return dataclasses.replace(self, status=FrameStatus.CLOSED, closer_turn=turn)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "opener_turn": self.opener_turn,
            "opener_act": self.opener_act.value,
            "status": self.status.value,
            "closer_turn": self.closer_turn,
        }


@dataclass(frozen=True)
class ConversationState:
    transcript: tuple[Utterance, ...]
    frames: tuple[SequenceFrame, ...]
    phase: DebugPhase
    pattern_mode: PatternMode
    max_depth: int = DEFAULT_MAX_DEPTH

    # -- derived views ------------------------------------------------------

    @property
    def open_frame_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.frames) if f.status is FrameStatus.OPEN)

    @property
    def depth(self) -> int:
        """Number of currently open frames (base pair included)."""
        return len(self.open_frame_indices)

    @property
    def top_open(self) -> SequenceFrame | None:
        idx = self.open_frame_indices
        return self.frames[idx[-1]] if idx else None

    @property
    def is_done(self) -> bool:
        return bool(self.frames) and self.frames[0].status is FrameStatus.CLOSED

    @property
    def next_turn_index(self) -> int:
        return len(self.transcript)

    @property
    def last_utterance(self) -> Utterance | None:
        return self.transcript[-1] if self.transcript else None

    def last_utterance_by(self, speaker: Speaker) -> Utterance | None:
        for u in reversed(self.transcript):
            if u.speaker is speaker:
                return u
        return None

    # -- serialization ------------------------------------------------------

    def to_snapshot(self) -> dict:
        return {
            "turns": [u.to_dict() for u in self.transcript],
            "frames": [f.to_dict() for f in self.frames],
            "phase": self.phase.value,
            "pattern_mode": self.pattern_mode.value,
        }


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def open_session(initial_request: Utterance, max_depth: int = DEFAULT_MAX_DEPTH) -> ConversationState:
    """Start a session from the user's primary request (turn 0)."""
    if initial_request.act is not DialogueAct.PRIMARY_REQUEST:
        raise RejectedAct("a session opens with a PrimaryRequest")
    if initial_request.speaker is not Speaker.USER:
        raise RejectedAct("only the user opens a session")
    if initial_request.turn_index != 0:
        raise RejectedAct("the primary request is turn 0")
    base = SequenceFrame(
        kind=FrameKind.BASE_PAIR,
        opener_turn=0,
        opener_act=DialogueAct.PRIMARY_REQUEST,
    )
    return ConversationState(
        transcript=(initial_request,),
        frames=(base,),
        phase=DebugPhase.IDENTIFICATION,
        pattern_mode=PatternMode.UNSET,
        max_depth=max_depth,
    )


def _close_top(state: ConversationState, turn: int) -> tuple[SequenceFrame, ...]:
    top_idx = state.open_frame_indices[-1]
    frames = list(state.frames)
    frames[top_idx] = frames[top_idx].closed_at(turn)
    return tuple(frames)


def _push_insert(state: ConversationState, u: Utterance) -> ConversationState:
    if state.depth >= state.max_depth:
        raise DepthExceeded(f"insert would exceed max depth {state.max_depth}")
    frame = SequenceFrame(
        kind=FrameKind.INSERT_EXPANSION,
        opener_turn=u.turn_index,
        opener_act=u.act,
    )
    return dataclasses.replace(
        state, transcript=state.transcript + (u,), frames=state.frames + (frame,)
    )


def apply_utterance(state: ConversationState, u: Utterance) -> ConversationState:
    """Append an utterance, updating the frame stack per the transition rules.

    Rules, keyed by the ids used in IllegalTransition:
      a. assistant InfoRequest/InstructionStep pushes an insert expansion
      b. user InfoProvision closes an assistant-opened top insert
      c. user MetaQuestion on an assistant-opened top insert nests another
      d. assistant Answer closes a user-opened (meta) top insert
      e. assistant Answer with only the base pair open closes the base
      f. HypothesisProposal / FixProposal / Acknowledgement leave the stack
         unchanged (fix acceptance closes the base via close_base)
    """
    if state.is_done:
        raise IllegalTransition("session-done", "the base pair is already closed")
    if u.turn_index != state.next_turn_index:
        raise IllegalTransition(
            "turn-index", f"expected turn {state.next_turn_index}, got {u.turn_index}"
        )
    last = state.last_utterance
    if last is not None and last.speaker is u.speaker:
        raise IllegalTransition("alternation", "speakers alternate strictly")

    top = state.top_open
    appended = state.transcript + (u,)

    if u.speaker is Speaker.ASSISTANT:
        if u.act in INSERT_OPENING_ACTS:  # rule a
            return _push_insert(state, u)
        if u.act is DialogueAct.ANSWER:
            assert top is not None
            if top.kind is FrameKind.INSERT_EXPANSION and not top.opened_by_assistant:
                # rule d: answering the user's meta-question
                return dataclasses.replace(
                    state, transcript=appended, frames=_close_top(state, u.turn_index)
                )
            if state.depth == 1:
                # rule e: direct answer to the primary request
                return dataclasses.replace(
                    state,
                    transcript=appended,
                    frames=_close_top(state, u.turn_index),
                    phase=DebugPhase.DONE,
                )
            raise IllegalTransition(
                "answer-pending-insert",
                "the assistant cannot answer its own open information request",
            )
        # rule f: hypothesis / fix proposal are transcript-only
        return dataclasses.replace(state, transcript=appended)

    # user turns
    if u.act is DialogueAct.PRIMARY_REQUEST:
        raise IllegalTransition("base-exists", "the session already has a base pair")
    if u.act is DialogueAct.INFO_PROVISION:
        if (
            top is not None
            and top.kind is FrameKind.INSERT_EXPANSION
            and top.opened_by_assistant
        ):  # rule b
            return dataclasses.replace(
                state, transcript=appended, frames=_close_top(state, u.turn_index)
            )
        raise IllegalTransition(
            "no-pending-request", "nothing was asked that this could answer"
        )
    if u.act is DialogueAct.META_QUESTION:
        if (
            top is not None
            and top.kind is FrameKind.INSERT_EXPANSION
            and top.opened_by_assistant
        ):  # rule c
            return _push_insert(state, u)
        raise IllegalTransition(
            "meta-needs-assistant-insert",
            "meta-questions nest inside an assistant information request",
        )
    # rule f: acknowledgement is transcript-only
    return dataclasses.replace(state, transcript=appended)


def close_base(state: ConversationState, fix_accepted: bool) -> ConversationState:
    """Close the base pair once every insert expansion is closed.

    `fix_accepted` records the user's verdict on a pending fix proposal; it
    does not change the state shape, only who gets to call this legally.
    """
    if state.is_done:
        raise IllegalTransition("session-done", "the base pair is already closed")
    if state.depth > 1:
        raise OpenInsertsRemain(f"{state.depth - 1} insert expansion(s) still open")
    frames = list(state.frames)
    frames[0] = frames[0].closed_at(state.next_turn_index)
    return dataclasses.replace(state, frames=tuple(frames), phase=DebugPhase.DONE)


def legal_next_acts(state: ConversationState) -> frozenset[tuple[Speaker, DialogueAct]]:
    """Exactly the (speaker, act) pairs apply_utterance would accept now.

    Implemented from the rule table directly (not by probing apply_utterance)
    so the two stay independent cross-checks of each other.
    """
    if state.is_done:
        return frozenset()
    last = state.last_utterance
    top = state.top_open
    can_push = state.depth < state.max_depth
    acts: set[tuple[Speaker, DialogueAct]] = set()

    assistant_turn = last is None or last.speaker is Speaker.USER
    if assistant_turn:
        if can_push:
            acts.add((Speaker.ASSISTANT, DialogueAct.INFO_REQUEST))
            acts.add((Speaker.ASSISTANT, DialogueAct.INSTRUCTION_STEP))
        acts.add((Speaker.ASSISTANT, DialogueAct.HYPOTHESIS_PROPOSAL))
        acts.add((Speaker.ASSISTANT, DialogueAct.FIX_PROPOSAL))
        closes_meta = (
            top is not None
            and top.kind is FrameKind.INSERT_EXPANSION
            and not top.opened_by_assistant
        )
        if closes_meta or state.depth == 1:
            acts.add((Speaker.ASSISTANT, DialogueAct.ANSWER))
    else:
        on_assistant_insert = (
            top is not None
            and top.kind is FrameKind.INSERT_EXPANSION
            and top.opened_by_assistant
        )
        if on_assistant_insert:
            acts.add((Speaker.USER, DialogueAct.INFO_PROVISION))
            if can_push:
                acts.add((Speaker.USER, DialogueAct.META_QUESTION))
        acts.add((Speaker.USER, DialogueAct.ACKNOWLEDGEMENT))
    return frozenset(acts)


def advance_phase(state: ConversationState, evidence: PhaseEvidence) -> ConversationState:
    """Move the debugging phase per the evidence kind.

    Forward moves go one stage at a time; stale evidence (pointing at or
    behind the current phase) is a no-op; skipping ahead raises. The only
    backward edge is Comprehension -> Localization on DeeperCauseSuspected.
    """
    if state.phase is DebugPhase.DONE:
        raise IllegalPhaseJump("the session is done; phases no longer advance")

    if evidence is PhaseEvidence.DEEPER_CAUSE_SUSPECTED:
        if state.phase is DebugPhase.COMPREHENSION:
            return dataclasses.replace(state, phase=DebugPhase.LOCALIZATION)
        return state

    target = _EVIDENCE_TARGET[evidence]
    cur = _PHASE_ORDER[state.phase]
    tgt = _PHASE_ORDER[target]
    if tgt <= cur:
        return state
    if tgt == cur + 1:
        return dataclasses.replace(state, phase=target)
    raise IllegalPhaseJump(
        f"{evidence.value} would jump {state.phase.value} -> {target.value}"
    )


def set_pattern_mode(state: ConversationState, mode: PatternMode) -> ConversationState:
    """Record the classified interaction pattern. Write-once."""
    if mode is PatternMode.UNSET:
        raise RejectedAct("cannot reset the pattern mode")
    if state.pattern_mode is not PatternMode.UNSET and state.pattern_mode is not mode:
        raise IllegalTransition("pattern-mode-set", "the pattern mode is write-once")
    return dataclasses.replace(state, pattern_mode=mode)
