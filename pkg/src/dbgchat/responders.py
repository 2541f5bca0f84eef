"""The decision agents: hardness classifier, eager and collaborative responders.

The classifier picks the interaction pattern once per session: single-turn
question-answer (eager) for simple bugs, multi-turn insert expansions
(collaborative) otherwise, defaulting to collaborative whenever uncertain.
The collaborative responder enforces two behavioral rules in code rather
than in prompts: no fix proposal before the fixing phase, and no references
to identifiers or locations that are not grounded in the debugger context or
the conversation itself.
"""

from __future__ import annotations

import json
import re

from .config import DEFAULT_CONFIG, EngineConfig
from .conversation import (
    ConversationState,
    DialogueAct,
    DebugPhase,
    FrameKind,
    PatternMode,
    Speaker,
    Utterance,
    legal_next_acts,
)
from .debugctx.model import DebugContext
from .errors import (
    BackendUnavailable,
    GatewayFailure,
    ScenarioFormatError,
    ScriptExhausted,
)
from .gateway import (
    AgentRole,
    CompletionBackend,
    CompletionRequest,
    assemble_prompt,
)
from .responses import (
    AssistantResponse,
    Fix,
    HardnessVerdict,
    InfoNeed,
    InfoNeedKind,
    Instruction,
    LocalizationClaim,
    ResponderMode,
    payload_from_dict,
)
from .textscan import extract_identifiers, merge_universe, tokens

_FENCE_OPEN_RE = re.compile(r"```(?:json)?\s*\n")

_INFO_SEEK_RE = re.compile(
    r"\b(can you|could you|please (share|provide)|share|provide|what is|what does|"
    r"value of|code for)\b",
    re.IGNORECASE,
)
_DEBUGGER_VERB_RE = re.compile(
    r"\b(set|add) a breakpoint\b|\bstep (through|into|over)\b|\binspect\b|"
    r"\brun (to|again|the)\b",
    re.IGNORECASE,
)
_HEDGED_CAUSAL_RE = re.compile(
    r"\b(might|may|could|possibly|perhaps|probably)\b.{0,80}\b(because|cause|due to)\b",
    re.IGNORECASE | re.DOTALL,
)
_CAUSAL_RE = re.compile(r"\b(because|fix|change|replace|reset)\b", re.IGNORECASE)
_DIFF_RE = re.compile(r"```|^[+-] ", re.MULTILINE)


def parse_structured(text: str) -> dict | list | None:
    """Extract the JSON object/array from a fenced block, or the whole text.

    Decodes exactly one JSON value starting after the fence, so code fences
    nested inside JSON strings do not confuse the extraction.
    """
    starts = [0]
    match = _FENCE_OPEN_RE.search(text)
    if match:
        starts.insert(0, match.end())
    decoder = json.JSONDecoder()
    for start in starts:
        candidate = text[start:].lstrip()
        try:
            parsed, _ = decoder.raw_decode(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(parsed, (dict, list)):
            return parsed
    return None


def infer_act(text: str) -> DialogueAct:
    """Rule-based dialogue-act classification for unstructured assistant text."""
    if not text.strip():
        raise ValueError("cannot classify empty text")
    stripped = text.strip()
    if stripped.endswith("?") and _INFO_SEEK_RE.search(stripped):
        return DialogueAct.INFO_REQUEST
    if _DEBUGGER_VERB_RE.search(stripped):
        return DialogueAct.INSTRUCTION_STEP
    if _HEDGED_CAUSAL_RE.search(stripped):
        return DialogueAct.HYPOTHESIS_PROPOSAL
    if _DIFF_RE.search(stripped) and _CAUSAL_RE.search(stripped):
        return DialogueAct.FIX_PROPOSAL
    return DialogueAct.ANSWER


def classify_user_act(text: str, state: ConversationState) -> DialogueAct:
    """Act for a typed user message: answers feed open requests, questions nest."""
    top = state.top_open
    on_assistant_insert = (
        top is not None
        and top.kind is FrameKind.INSERT_EXPANSION
        and top.opened_by_assistant
    )
    if on_assistant_insert:
        if text.strip().endswith("?"):
            return DialogueAct.META_QUESTION
        return DialogueAct.INFO_PROVISION
    return DialogueAct.ACKNOWLEDGEMENT


# ---------------------------------------------------------------------------
# Hardness classification
# ---------------------------------------------------------------------------

def _heuristic_verdict(ctx: DebugContext | None, config: EngineConfig) -> HardnessVerdict:
    if ctx is None or not ctx.frames:
        return HardnessVerdict(
            mode=ResponderMode.COLLABORATIVE,
            rationale="no debugger context available; defaulting to collaboration",
            confidence=0.5,
        )
    top = ctx.frames[0]
    in_user_code = not any(
        top.location.path.startswith(p) for p in config.library_path_prefixes
    ) and not any(
        top.function_name.startswith(p) for p in config.library_function_prefixes
    )
    simple_type = any(s in ctx.exception.type_name for s in config.simple_exception_types)
    thrown_on_top = ctx.exception.thrown_at == top.location
    if in_user_code and simple_type and thrown_on_top:
        return HardnessVerdict(
            mode=ResponderMode.ONE_SHOT,
            rationale="simple exception thrown directly in user code",
            confidence=0.75,
        )
    return HardnessVerdict(
        mode=ResponderMode.COLLABORATIVE,
        rationale="exception originates in or below library code; investigate first",
        confidence=0.8,
    )


def classify_hardness(
    ctx: DebugContext | None,
    request: Utterance,
    gateway: CompletionBackend,
    *,
    session_key: str = "",
    scenario_id: str | None = None,
    ctx_summary: str = "",
    config: EngineConfig = DEFAULT_CONFIG,
) -> HardnessVerdict:
    """Decide the interaction pattern for a fresh session.

    Never raises: unparseable output falls back to a context heuristic, and
    backend failure degrades to the collaborative branch.
    """
    try:
        bundle = assemble_prompt(AgentRole.HARDNESS, None, ctx_summary, config)
        result = gateway.complete(
            CompletionRequest(
                bundle=bundle,
                role=AgentRole.HARDNESS,
                session_key=session_key,
                scenario_id=scenario_id,
                step=0,
            )
        )
        parsed = parse_structured(result.text)
    except Exception:
        return HardnessVerdict(
            mode=ResponderMode.COLLABORATIVE,
            rationale="hardness backend unavailable; defaulting to collaboration",
            confidence=0.5,
        )
    if not isinstance(parsed, dict) or "mode" not in parsed:
        return _heuristic_verdict(ctx, config)
    try:
        verdict = HardnessVerdict(
            mode=ResponderMode(parsed["mode"]),
            rationale=str(parsed.get("rationale", "")),
            confidence=float(parsed.get("confidence", 0.0)),
        )
    except (ValueError, KeyError):
        return _heuristic_verdict(ctx, config)
    if verdict.mode is ResponderMode.ONE_SHOT and verdict.confidence < config.one_shot_threshold:
        return HardnessVerdict(
            mode=ResponderMode.COLLABORATIVE,
            rationale=verdict.rationale + " (confidence below the one-shot threshold)",
            confidence=verdict.confidence,
        )
    return verdict


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------

def conversation_identifiers(state: ConversationState, base: frozenset[str]) -> frozenset[str]:
    """Identifiers introduced by the conversation itself (e.g. pasted code)."""
    found: set[str] = set()
    for utterance in state.transcript:
        found.update(extract_identifiers(utterance.text, base))
    return frozenset(found)


def _grounded(payload, universe: frozenset[str], paths: frozenset[str]) -> bool:
    """Locations must name a known file; identifiers must be known tokens."""
    if isinstance(payload, InfoNeed):
        return any(tok in universe for tok in tokens(payload.target))
    if isinstance(payload, Instruction):
        for step in payload.steps:
            if step.location is not None and step.location.path not in paths:
                return False
            if step.variable is not None and step.variable not in universe:
                return False
        return True
    return True


def _clarifying_info_request(ctx: DebugContext | None) -> AssistantResponse:
    """Deterministic substitute when a structured output is rejected."""
    target = "the failing call"
    if ctx is not None:
        for frame in ctx.frames:
            if frame.locals:
                target = frame.locals[0].name
                break
        else:
            first = tokens(ctx.exception.type_name)
            target = first[0] if first else target
    return AssistantResponse(
        act=DialogueAct.INFO_REQUEST,
        body=(
            "Before going further, let me make sure I am not guessing: can you "
            f"provide the current value of `{target}`?"
        ),
        payload=InfoNeed(kind=InfoNeedKind.VARIABLE_VALUE, target=target),
    )


# ---------------------------------------------------------------------------
# Responders
# ---------------------------------------------------------------------------

def _inline_followups(parsed: dict, ctx: DebugContext | None) -> tuple:
    """Follow-ups a live backend inlined in its structured output, if any."""
    from .responses import Followup, FollowupKind

    raw = parsed.get("followups")
    if not isinstance(raw, list):
        return ()
    universe = ctx.identifier_universe() if ctx is not None else frozenset()
    out = []
    for entry in raw[:3]:
        if not isinstance(entry, dict) or not str(entry.get("text", "")).strip():
            continue
        try:
            kind = FollowupKind(entry.get("kind", "NewTopic"))
        except ValueError:
            kind = FollowupKind.NEW_TOPIC
        text = str(entry["text"]).strip()
        out.append(
            Followup(text=text, kind=kind, anchor_entities=extract_identifiers(text, universe))
        )
    return tuple(out)


def _structured_response(parsed: dict, fallback_text: str, ctx: DebugContext | None) -> AssistantResponse:
    act_name = parsed.get("act") if isinstance(parsed, dict) else None
    try:
        act = DialogueAct(act_name)
    except ValueError:
        act = infer_act(fallback_text)
        parsed = {"body": fallback_text}
    body = str(parsed.get("body", fallback_text))
    try:
        payload = payload_from_dict(act, parsed.get("payload"))
    except ScenarioFormatError:
        payload = None
    if act in (DialogueAct.INFO_REQUEST, DialogueAct.INSTRUCTION_STEP,
               DialogueAct.HYPOTHESIS_PROPOSAL, DialogueAct.FIX_PROPOSAL) and payload is None:
        # Unstructured output claiming a payload-bearing act: synthesize what
        # we can, otherwise degrade to a plain answer.
        if act is DialogueAct.FIX_PROPOSAL:
            payload = Fix(fix_id=None, diff_text="", explanation=body)
        elif act is DialogueAct.INFO_REQUEST and ctx is not None:
            ids = extract_identifiers(body, ctx.identifier_universe())
            if ids:
                payload = InfoNeed(kind=InfoNeedKind.VARIABLE_VALUE, target=ids[0])
            else:
                act = DialogueAct.ANSWER
        else:
            act = DialogueAct.ANSWER
    claim = None
    raw_claim = parsed.get("declares_localization") if isinstance(parsed, dict) else None
    if isinstance(raw_claim, dict):
        from .debugctx.model import SourceLocation

        claim = LocalizationClaim(
            function_name=raw_claim["function_name"],
            location=SourceLocation.from_dict(raw_claim["location"]),
        )
    return AssistantResponse(
        act=act,
        body=body,
        payload=payload,
        followups=_inline_followups(parsed, ctx),
        declares_localization=claim,
    )


def _complete_response(
    role: AgentRole,
    state: ConversationState,
    ctx: DebugContext | None,
    gateway: CompletionBackend,
    *,
    step: int,
    session_key: str,
    scenario_id: str | None,
    ctx_summary: str,
    config: EngineConfig,
) -> AssistantResponse:
    bundle = assemble_prompt(role, state, ctx_summary, config)
    try:
        result = gateway.complete(
            CompletionRequest(
                bundle=bundle,
                role=role,
                session_key=session_key,
                scenario_id=scenario_id,
                step=step,
            )
        )
    except ScriptExhausted:
        raise
    except BackendUnavailable as exc:
        raise GatewayFailure(str(exc)) from exc
    parsed = parse_structured(result.text)
    if isinstance(parsed, dict):
        return _structured_response(parsed, result.text, ctx)
    act = infer_act(result.text)
    return _structured_response({"act": act.value, "body": result.text}, result.text, ctx)


def eager_respond(
    state: ConversationState,
    ctx: DebugContext | None,
    gateway: CompletionBackend,
    *,
    step: int = 0,
    session_key: str = "",
    scenario_id: str | None = None,
    ctx_summary: str = "",
    config: EngineConfig = DEFAULT_CONFIG,
) -> AssistantResponse:
    """Single-turn response: explanation plus a concrete fix proposal."""
    if state.pattern_mode is not PatternMode.EAGER_QA:
        raise ValueError("eager_respond requires pattern_mode=EagerQA")
    if state.depth != 1 or len(state.frames) != 1:
        raise ValueError("eager_respond runs with only the base pair open")
    response = _complete_response(
        AgentRole.EAGER, state, ctx, gateway,
        step=step, session_key=session_key, scenario_id=scenario_id,
        ctx_summary=ctx_summary, config=config,
    )
    if response.act is not DialogueAct.FIX_PROPOSAL:
        response = AssistantResponse(
            act=DialogueAct.FIX_PROPOSAL,
            body=response.body,
            payload=Fix(fix_id=None, diff_text="", explanation=response.body),
            declares_localization=response.declares_localization,
        )
    return response


def collaborative_respond(
    state: ConversationState,
    ctx: DebugContext | None,
    gateway: CompletionBackend,
    *,
    step: int,
    session_key: str = "",
    scenario_id: str | None = None,
    ctx_summary: str = "",
    pending_need: InfoNeed | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
) -> AssistantResponse:
    """One collaborative turn: request info, instruct, hypothesize, answer or fix.

    A user meta-question on top of the stack is answered structurally (how to
    obtain the requested information) without consuming a script step, so the
    scripted path is insensitive to meta detours. A fix produced before the
    fixing phase, or a payload referencing unknown identifiers or files, is
    rejected and replaced with a clarifying information request.
    """
    if state.pattern_mode is not PatternMode.COLLABORATIVE_IE:
        raise ValueError("collaborative_respond requires pattern_mode=CollaborativeIE")
    if state.is_done:
        raise ValueError("the base pair is already closed")

    top = state.top_open
    if (
        top is not None
        and top.kind is FrameKind.INSERT_EXPANSION
        and not top.opened_by_assistant
    ):
        return _meta_answer(state, ctx, pending_need)

    response = _complete_response(
        AgentRole.COLLABORATIVE, state, ctx, gateway,
        step=step, session_key=session_key, scenario_id=scenario_id,
        ctx_summary=ctx_summary, config=config,
    )

    if response.act is DialogueAct.FIX_PROPOSAL and (
        state.phase is not DebugPhase.FIXING or state.depth > 1
    ):
        # The no-premature-fix rule, enforced in code: reject and clarify.
        return _clarifying_info_request(ctx)

    base_universe = ctx.identifier_universe() if ctx is not None else frozenset()
    universe = merge_universe(base_universe, conversation_identifiers(state, base_universe))
    paths = ctx.known_paths() if ctx is not None else frozenset()
    if not _grounded(response.payload, universe, paths):
        return _clarifying_info_request(ctx)

    if (Speaker.ASSISTANT, response.act) not in legal_next_acts(state):
        return _clarifying_info_request(ctx)
    return response


def _meta_answer(
    state: ConversationState, ctx: DebugContext | None, pending_need: InfoNeed | None
) -> AssistantResponse:
    """Answer "how do I find that?" from the pending information request."""
    target = pending_need.target if pending_need is not None else "the value"
    spot = ""
    if ctx is not None:
        for frame in ctx.frames:
            if any(b.name == target for b in frame.locals):
                spot = f" (execution pauses in {frame.function_name} at {frame.location.key()})"
                break
    if pending_need is not None and pending_need.kind is InfoNeedKind.METHOD_SOURCE:
        body = (
            f"Use Go To Definition on `{target}` (F12) to open the method, then copy "
            "its body into the chat."
        )
    else:
        body = (
            f"Set a breakpoint where `{target}` is in scope{spot}, run again, and when "
            f"the debugger pauses, hover `{target}` or add it to the Watch window to "
            "read its current value."
        )
    return AssistantResponse(act=DialogueAct.ANSWER, body=body)
