"""Follow-up suggestions and the deterministic alignment checker.

Follow-ups are candidate next-user utterances: likely answers and
meta-questions while an information request is pending, new-topic
continuations otherwise. Alignment is lexical — a follow-up must anchor on
an identifier the open exchange or the last response is actually about —
which makes the check pure, deterministic, and usable both in tests and as
a filter on live-backend output.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import DEFAULT_CONFIG, EngineConfig
from .conversation import ConversationState, DialogueAct, FrameKind, Origin, Speaker, Utterance
from .debugctx.model import DebugContext
from .errors import NoneGenerated
from .gateway import AgentRole, CompletionBackend, CompletionRequest, assemble_prompt
from .responders import conversation_identifiers, parse_structured
from .responses import (
    AssistantResponse,
    Followup,
    FollowupKind,
    InfoNeed,
    Instruction,
)
from .textscan import extract_identifiers, merge_universe, path_tokens, tokens

CLICK_ACTS = {
    FollowupKind.ANSWER_CANDIDATE: DialogueAct.INFO_PROVISION,
    FollowupKind.META_QUESTION: DialogueAct.META_QUESTION,
    FollowupKind.NEW_TOPIC: DialogueAct.ACKNOWLEDGEMENT,
}


@dataclass(frozen=True)
class AlignmentVerdict:
    aligned: bool
    reason: str | None = None

    @classmethod
    def ok(cls) -> "AlignmentVerdict":
        return cls(aligned=True)

    @classmethod
    def misaligned(cls, reason: str) -> "AlignmentVerdict":
        return cls(aligned=False, reason=reason)


def _open_need_targets(
    state: ConversationState,
    last_response: AssistantResponse | None,
    ctx: DebugContext | None,
    pending_need: InfoNeed | None,
) -> frozenset[str] | None:
    """Identifier set of the open assistant information request, if one is open."""
    top = state.top_open
    if (
        top is None
        or top.kind is not FrameKind.INSERT_EXPANSION
        or not top.opened_by_assistant
    ):
        return None
    payload = None
    if last_response is not None and last_response.act in (
        DialogueAct.INFO_REQUEST,
        DialogueAct.INSTRUCTION_STEP,
    ):
        payload = last_response.payload
    if payload is None and pending_need is not None:
        payload = pending_need
    targets: set[str] = set()
    if isinstance(payload, InfoNeed):
        targets.update(tokens(payload.target))
    elif isinstance(payload, Instruction):
        for step in payload.steps:
            if step.variable:
                targets.add(step.variable)
            if step.location is not None:
                targets.update(path_tokens(step.location.path))
                if ctx is not None:
                    for frame in ctx.frames:
                        if frame.location == step.location:
                            targets.update(tokens(frame.function_name))
    return frozenset(targets)


def check_alignment(
    f: Followup,
    state: ConversationState,
    last_response: AssistantResponse | None,
    ctx: DebugContext | None,
    pending_need: InfoNeed | None = None,
) -> AlignmentVerdict:
    """Aligned iff the follow-up anchors on what the conversation is about.

    With an assistant information request open: the follow-up must be an
    AnswerCandidate or MetaQuestion anchored on the request's target.
    Otherwise: it must be a NewTopic anchored on an identifier from the last
    response body or the top stack frame.
    """
    if not f.anchor_entities:
        return AlignmentVerdict.misaligned("empty-anchor-entities")
    anchors = set(f.anchor_entities)

    targets = _open_need_targets(state, last_response, ctx, pending_need)
    if targets is not None:
        if f.kind not in (FollowupKind.ANSWER_CANDIDATE, FollowupKind.META_QUESTION):
            return AlignmentVerdict.misaligned("open-insert-expects-answer-or-meta")
        if not anchors & targets:
            return AlignmentVerdict.misaligned("entity-mismatch")
        return AlignmentVerdict.ok()

    if f.kind is not FollowupKind.NEW_TOPIC:
        return AlignmentVerdict.misaligned("kind-requires-open-insert")
    scope: set[str] = set()
    if last_response is not None:
        base = ctx.identifier_universe() if ctx is not None else frozenset()
        scope.update(extract_identifiers(last_response.body, base))
        if last_response.payload is not None:
            scope.update(
                extract_identifiers(str(last_response.payload.to_dict()), base)
            )
    if ctx is not None and ctx.top_frame is not None:
        frame = ctx.top_frame
        scope.update(tokens(frame.function_name))
        scope.update(b.name for b in frame.locals)
        scope.update(path_tokens(frame.location.path))
    if not anchors & scope:
        return AlignmentVerdict.misaligned("entity-mismatch")
    return AlignmentVerdict.ok()


def _candidate_followups(
    raw, universe: frozenset[str], config: EngineConfig
) -> list[Followup]:
    out: list[Followup] = []
    if not isinstance(raw, list):
        return out
    for entry in raw:
        if not isinstance(entry, dict):
            continue
        text = str(entry.get("text", "")).strip()
        if not text:
            continue
        try:
            kind = FollowupKind(entry.get("kind", "NewTopic"))
        except ValueError:
            kind = FollowupKind.NEW_TOPIC
        out.append(
            Followup(
                text=text,
                kind=kind,
                anchor_entities=extract_identifiers(text, universe),
            )
        )
        if len(out) >= config.followup_max:
            break
    return out


def generate_followups(
    state: ConversationState,
    last_response: AssistantResponse,
    ctx: DebugContext | None,
    gateway: CompletionBackend,
    *,
    step: int,
    session_key: str = "",
    scenario_id: str | None = None,
    variant: str = "collaborative",
    ctx_summary: str = "",
    pending_need: InfoNeed | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> tuple[Followup, ...]:
    """1-3 aligned candidate next-user utterances for the turn just produced.

    Candidates failing the alignment check are dropped; if all are dropped
    the backend is asked once more, and if nothing survives that either,
    NoneGenerated is raised and the turn renders without follow-ups.
    """
    if not state.transcript or state.last_utterance.speaker is not Speaker.ASSISTANT:
        raise ValueError("follow-ups are generated for the assistant turn just produced")

    base = ctx.identifier_universe() if ctx is not None else frozenset()
    universe = merge_universe(
        base,
        conversation_identifiers(state, base),
        extract_identifiers(last_response.body, base),
    )

    survivors: list[Followup] = []
    for _ in range(2):  # one regeneration on a fully-filtered batch
        bundle = assemble_prompt(AgentRole.FOLLOWUP, state, ctx_summary, config)
        result = gateway.complete(
            CompletionRequest(
                bundle=bundle,
                role=AgentRole.FOLLOWUP,
                session_key=session_key,
                scenario_id=scenario_id,
                variant=variant,
                step=step,
            )
        )
        candidates = _candidate_followups(parse_structured(result.text), universe, config)
        survivors = [
            f
            for f in candidates
            if check_alignment(f, state, last_response, ctx, pending_need).aligned
        ]
        if survivors:
            break
    survivors = _ensure_request_pair(survivors, last_response, ctx, universe)
    if not survivors:
        raise NoneGenerated("all candidate follow-ups were filtered out")
    return tuple(survivors[: config.followup_max])


def _recorded_value(ctx: DebugContext | None, name: str) -> str | None:
    if ctx is None:
        return None
    for frame in ctx.frames:
        for binding in frame.locals:
            if binding.name == name:
                return binding.rendered_value or '""'
    return None


def _ensure_request_pair(
    survivors: list[Followup],
    last_response: AssistantResponse,
    ctx: DebugContext | None,
    universe: frozenset[str],
) -> list[Followup]:
    """After an information request, keep one likely answer and one meta-question.

    Scripted tables already provide both; this backstops live output by
    synthesizing the missing kind from the request's target.
    """
    if last_response.act is not DialogueAct.INFO_REQUEST or not isinstance(
        last_response.payload, InfoNeed
    ):
        return survivors
    target = last_response.payload.target
    anchors = extract_identifiers(target, universe) or (target,)
    have = {f.kind for f in survivors}
    additions: list[Followup] = []
    if FollowupKind.ANSWER_CANDIDATE not in have:
        value = _recorded_value(ctx, target)
        if value is not None:
            additions.append(
                Followup(
                    text=f"{target} is {value}",
                    kind=FollowupKind.ANSWER_CANDIDATE,
                    anchor_entities=anchors,
                )
            )
    if FollowupKind.META_QUESTION not in have:
        additions.append(
            Followup(
                text=f"How can I check the value of {target} during execution?",
                kind=FollowupKind.META_QUESTION,
                anchor_entities=anchors,
            )
        )
    return additions + survivors


def click_to_utterance(followup: Followup, turn_index: int) -> Utterance:
    """The user utterance produced by clicking a follow-up."""
    return Utterance(
        speaker=Speaker.USER,
        text=followup.text,
        act=CLICK_ACTS[followup.kind],
        turn_index=turn_index,
        origin=Origin.FOLLOWUP_CLICK,
    )
