"""Session lifecycle: wire user messages through the state machine,
classifier, responders, follow-up generation and persistence.

Turn processing is serialized per session (a lock per session); distinct
sessions proceed independently. A turn is committed atomically: state is
assigned and persisted only after the whole turn succeeded, so a backend
failure leaves the session exactly where it was.
"""

from __future__ import annotations

import dataclasses
import re
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..config import DEFAULT_CONFIG, EngineConfig
from ..conversation import (
    ConversationState,
    DebugPhase,
    DialogueAct,
    Origin,
    PatternMode,
    PhaseEvidence,
    Speaker,
    Utterance,
    advance_phase,
    apply_utterance,
    close_base,
    legal_next_acts,
    open_session,
    set_pattern_mode,
)
from ..debugctx import AdapterClient, DebugContext, capture_context, make_simulated_adapter
from ..debugctx.summarize import summarize_context
from ..errors import NoneGenerated, SessionClosed, SessionNotFound, UnknownScenario
from ..followups import CLICK_ACTS, check_alignment, generate_followups
from ..gateway import CompletionBackend, LiveBackend, ScriptedBackend
from ..responders import classify_hardness, classify_user_act, collaborative_respond, eager_respond
from ..responses import (
    AssistantResponse,
    Followup,
    InfoNeed,
    InfoNeedKind,
    Instruction,
    ResponderMode,
)
from ..scenarios import Scenario, list_scenarios, load_scenario
from .store import MetricEvent, MetricEventKind, SessionRecord, SessionStore, snapshot_hash, utc_now

INSERT_OPENING = (DialogueAct.INFO_REQUEST, DialogueAct.INSTRUCTION_STEP)


@dataclass
class UserTurnEffects:
    closed_insert: bool = False
    closed_base: bool = False
    fix_verdict: bool | None = None
    evidence: PhaseEvidence | None = None


def apply_user_turn(
    state: ConversationState, utt: Utterance, accept_re: re.Pattern
) -> tuple[ConversationState, UserTurnEffects]:
    """Apply a user utterance plus the deterministic bookkeeping around it.

    Pure: used identically by live turn processing and by replay.
    Bookkeeping rules:
      - an InfoProvision that closes an insert advances the phase one step
        during identification/localization (the provided information is what
        those phases were waiting for);
      - an Acknowledgement after a FixProposal at depth 1 is the user's
        verdict: acceptance closes the base pair, rejection closes it too in
        eager mode (the single-turn pattern is complete) and keeps it open in
        collaborative mode;
      - an Acknowledgement after a HypothesisProposal during comprehension
        confirms the cause and moves to fixing.
    """
    effects = UserTurnEffects()
    depth_before = state.depth
    last_assistant = state.last_utterance_by(Speaker.ASSISTANT)
    new_state = apply_utterance(state, utt)

    if utt.act is DialogueAct.INFO_PROVISION and new_state.depth < depth_before:
        effects.closed_insert = True
        if new_state.phase is DebugPhase.IDENTIFICATION:
            effects.evidence = PhaseEvidence.EXCEPTION_UNDERSTOOD
        elif new_state.phase is DebugPhase.LOCALIZATION:
            effects.evidence = PhaseEvidence.ROOT_FRAME_NAMED
        if effects.evidence is not None:
            new_state = advance_phase(new_state, effects.evidence)

    if utt.act is DialogueAct.ACKNOWLEDGEMENT and last_assistant is not None:
        if last_assistant.act is DialogueAct.FIX_PROPOSAL and new_state.depth == 1:
            accepted = bool(accept_re.search(utt.text))
            effects.fix_verdict = accepted
            if accepted or new_state.pattern_mode is PatternMode.EAGER_QA:
                new_state = close_base(new_state, fix_accepted=accepted)
                effects.closed_base = True
        elif (
            last_assistant.act is DialogueAct.HYPOTHESIS_PROPOSAL
            and new_state.phase is DebugPhase.COMPREHENSION
        ):
            effects.evidence = PhaseEvidence.CAUSE_EXPLAINED
            new_state = advance_phase(new_state, effects.evidence)

    return new_state, effects


@dataclass
class _PendingInsert:
    opener: str  # "assistant" | "meta"
    need: InfoNeed | None = None
    followups: tuple[Followup, ...] = ()


@dataclass
class _Session:
    session_id: str
    scenario: Scenario | None
    backend: CompletionBackend
    backend_name: str
    mode_override: str | None
    adapter: AdapterClient | None
    ctx: DebugContext | None
    ctx_summary: str
    state: ConversationState | None = None
    collaborative_step: int = 0
    pending: list[_PendingInsert] = field(default_factory=list)
    last_response: AssistantResponse | None = None
    localization_declared: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class TurnResult:
    response: AssistantResponse | None
    state_view: dict
    legal_next_acts: list[tuple[str, str]]


def _need_from_payload(response: AssistantResponse) -> InfoNeed | None:
    if isinstance(response.payload, InfoNeed):
        return response.payload
    if isinstance(response.payload, Instruction):
        for step in response.payload.steps:
            if step.variable:
                return InfoNeed(kind=InfoNeedKind.OBSERVATION, target=step.variable)
        for step in response.payload.steps:
            if step.location is not None:
                return InfoNeed(kind=InfoNeedKind.OBSERVATION, target=step.location.path)
    return None


class Orchestrator:
    """Multi-session engine behind the HTTP API, the CLI and the harness."""

    def __init__(
        self,
        config: EngineConfig = DEFAULT_CONFIG,
        sessions_dir: str | Path | None = None,
        live_backend: CompletionBackend | None = None,
    ):
        self.config = config
        self.store = SessionStore(sessions_dir or config.sessions_dir)
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()
        self._accept_re = re.compile(config.accept_fix_pattern, re.IGNORECASE)
        self._scripted = ScriptedBackend()
        for scenario in list_scenarios():
            self._scripted.register(scenario.id, scenario.scripted_llm)
        self._live = live_backend

    # -- session management --------------------------------------------------

    def create_session(
        self,
        scenario_id: str | None = None,
        mode_override: str | None = None,
        backend: str = "scripted",
    ) -> str:
        scenario = load_scenario(scenario_id) if scenario_id else None
        if backend == "scripted" and scenario is None:
            raise UnknownScenario("scripted sessions require a scenario")
        if backend == "live":
            completion_backend = self._live or LiveBackend(self.config)
        else:
            completion_backend = self._scripted

        adapter = ctx = None
        ctx_summary = ""
        if scenario is not None:
            if self.config.adapter_command:
                from ..debugctx.adapter import make_stdio_adapter

                command = self.config.adapter_command.format(scenario_id=scenario.id)
                adapter = make_stdio_adapter(command)
            else:
                adapter = make_simulated_adapter(scenario)
            ctx = capture_context(adapter, self.config)
            ctx_summary = summarize_context(ctx, self.config.context_budget_chars, self.config)

        session_id = uuid.uuid4().hex[:12]
        session = _Session(
            session_id=session_id,
            scenario=scenario,
            backend=completion_backend,
            backend_name=backend,
            mode_override=mode_override,
            adapter=adapter,
            ctx=ctx,
            ctx_summary=ctx_summary,
        )
        with self._lock:
            self._sessions[session_id] = session
        self.store.append(
            session_id,
            {
                "type": "created",
                "session_id": session_id,
                "scenario_id": scenario_id,
                "created_at": utc_now(),
                "backend": backend,
                "mode_override": mode_override,
            },
        )
        return session_id

    def _get(self, session_id: str) -> _Session:
        with self._lock:
            if session_id not in self._sessions:
                raise SessionNotFound(session_id)
            return self._sessions[session_id]

    def get_record(self, session_id: str) -> SessionRecord:
        self._get(session_id)
        return self.store.load(session_id)

    def get_adapter(self, session_id: str) -> AdapterClient | None:
        return self._get(session_id).adapter

    @staticmethod
    def scenario_catalog() -> list[dict]:
        return [{"id": s.id, "title": s.title} for s in list_scenarios()]

    # -- turn processing -------------------------------------------------------

    def handle_user_message(
        self, session_id: str, text: str, origin: Origin = Origin.TYPED
    ) -> TurnResult:
        session = self._get(session_id)
        with session.lock:
            return self._process_turn(session, text, origin)

    def _classify_incoming(
        self, session: _Session, text: str, origin: Origin
    ) -> tuple[DialogueAct, Origin, Followup | None]:
        if session.state is None:
            return DialogueAct.PRIMARY_REQUEST, Origin.TYPED, None
        if origin is Origin.FOLLOWUP_CLICK:
            offered = session.last_response.followups if session.last_response else ()
            for followup in offered:
                if followup.text == text:
                    return CLICK_ACTS[followup.kind], Origin.FOLLOWUP_CLICK, followup
            # Unknown click text: treat as typed input.
        return classify_user_act(text, session.state), Origin.TYPED, None

    def _process_turn(self, session: _Session, text: str, origin: Origin) -> TurnResult:
        if session.state is not None and session.state.is_done:
            raise SessionClosed(session.session_id)

        act, final_origin, clicked = self._classify_incoming(session, text, origin)
        turn_index = 0 if session.state is None else session.state.next_turn_index
        utterance = Utterance(
            speaker=Speaker.USER, text=text, act=act, turn_index=turn_index, origin=final_origin
        )

        events: list[MetricEvent] = [
            MetricEvent(MetricEventKind.PROMPT_SENT, turn_index, {"origin": final_origin.value})
        ]
        if clicked is not None:
            events.append(
                MetricEvent(
                    MetricEventKind.FOLLOWUP_CLICKED,
                    turn_index,
                    {"text": clicked.text, "kind": clicked.kind.value},
                )
            )

        pending = list(session.pending)
        meta_line: dict | None = None

        if session.state is None:
            state = open_session(utterance, self.config.max_expansion_depth)
            effects = UserTurnEffects()
        else:
            state, effects = apply_user_turn(session.state, utterance, self._accept_re)
            if utterance.act is DialogueAct.META_QUESTION:
                pending.append(_PendingInsert(opener="meta"))
            if effects.closed_insert and pending:
                pending.pop()

        if effects.fix_verdict is not None:
            fix_id = None
            if session.last_response is not None and session.last_response.payload is not None:
                fix_id = getattr(session.last_response.payload, "fix_id", None)
            if effects.fix_verdict:
                events.append(
                    MetricEvent(MetricEventKind.FIX_ACCEPTED, turn_index, {"fix_id": fix_id})
                )
        if effects.closed_base:
            events.append(
                MetricEvent(
                    MetricEventKind.SESSION_CLOSED,
                    turn_index,
                    {"fix_accepted": bool(effects.fix_verdict)},
                )
            )

        response: AssistantResponse | None = None
        consumed_collab_step = False
        if not state.is_done:
            if state.pattern_mode is PatternMode.UNSET:
                state, meta_line = self._classify_session(session, state, utterance)
            state, response, more_events, pending, consumed_collab_step = self._assistant_turn(
                session, state, pending
            )
            events.extend(more_events)

        # Commit: persist first (flushed before returning), then swap state in.
        final_hash = snapshot_hash(state)
        if meta_line is not None:
            self.store.append(session.session_id, meta_line)
        for event in events:
            self.store.append(session.session_id, {"type": "event", "event": event.to_dict()})
        self.store.append(
            session.session_id,
            {
                "type": "turn",
                "utterance": utterance.to_dict(),
                "response": response.to_dict() if response else None,
                "state_snapshot_hash": final_hash,
            },
        )
        session.state = state
        session.pending = pending
        session.last_response = response
        if consumed_collab_step:
            session.collaborative_step += 1
        if any(e.kind is MetricEventKind.LOCALIZATION_DECLARED for e in events):
            session.localization_declared = True

        return TurnResult(
            response=response,
            state_view=self._view(session),
            legal_next_acts=sorted(
                (speaker.value, act.value) for speaker, act in legal_next_acts(state)
            ),
        )

    def _classify_session(
        self, session: _Session, state: ConversationState, request: Utterance
    ) -> tuple[ConversationState, dict]:
        if session.mode_override == "ForceEager":
            verdict_dict = {"mode": "OneShot", "rationale": "forced", "confidence": 1.0}
            mode = PatternMode.EAGER_QA
        elif session.mode_override == "ForceCollaborative":
            verdict_dict = {"mode": "Collaborative", "rationale": "forced", "confidence": 1.0}
            mode = PatternMode.COLLABORATIVE_IE
        else:
            verdict = classify_hardness(
                session.ctx,
                request,
                session.backend,
                session_key=session.session_id,
                scenario_id=session.scenario.id if session.scenario else None,
                ctx_summary=session.ctx_summary,
                config=self.config,
            )
            verdict_dict = verdict.to_dict()
            mode = (
                PatternMode.EAGER_QA
                if verdict.mode is ResponderMode.ONE_SHOT
                else PatternMode.COLLABORATIVE_IE
            )
        state = set_pattern_mode(state, mode)
        return state, {"type": "meta", "pattern_mode": mode.value, "verdict": verdict_dict}

    def _assistant_turn(
        self,
        session: _Session,
        state: ConversationState,
        pending: list[_PendingInsert],
    ) -> tuple[
        ConversationState, AssistantResponse, list[MetricEvent], list[_PendingInsert], bool
    ]:
        events: list[MetricEvent] = []
        scenario_id = session.scenario.id if session.scenario else None
        meta_turn = bool(pending) and pending[-1].opener == "meta"
        pending_need = None
        if meta_turn and len(pending) >= 2:
            pending_need = pending[-2].need
        elif pending:
            pending_need = pending[-1].need

        if state.pattern_mode is PatternMode.EAGER_QA:
            step = 0
            response = eager_respond(
                state,
                session.ctx,
                session.backend,
                step=step,
                session_key=session.session_id,
                scenario_id=scenario_id,
                ctx_summary=session.ctx_summary,
                config=self.config,
            )
            variant = "eager"
            consumed_step = step
        else:
            step = session.collaborative_step
            response = collaborative_respond(
                state,
                session.ctx,
                session.backend,
                step=step,
                session_key=session.session_id,
                scenario_id=scenario_id,
                ctx_summary=session.ctx_summary,
                pending_need=pending_need,
                config=self.config,
            )
            variant = "collaborative"
            consumed_step = step

        turn_index = state.next_turn_index
        assistant_utt = Utterance(
            speaker=Speaker.ASSISTANT, text=response.body, act=response.act, turn_index=turn_index
        )
        state = apply_utterance(state, assistant_utt)

        if response.act in INSERT_OPENING:
            pending.append(
                _PendingInsert(opener="assistant", need=_need_from_payload(response))
            )
        if meta_turn and response.act is DialogueAct.ANSWER:
            pending.pop()  # the meta insert just closed

        if response.declares_localization is not None and not session.localization_declared:
            events.append(
                MetricEvent(
                    MetricEventKind.LOCALIZATION_DECLARED,
                    turn_index,
                    response.declares_localization.to_dict(),
                )
            )
        if response.act is DialogueAct.FIX_PROPOSAL:
            fix_id = getattr(response.payload, "fix_id", None)
            events.append(MetricEvent(MetricEventKind.FIX_PROPOSED, turn_index, {"fix_id": fix_id}))
        consumed = state.pattern_mode is PatternMode.COLLABORATIVE_IE and not meta_turn
        if state.is_done:
            events.append(
                MetricEvent(MetricEventKind.SESSION_CLOSED, turn_index, {"fix_accepted": False})
            )
            return state, response, events, pending, consumed

        followups = self._followups_for(
            session, state, response, pending, variant=variant, step=consumed_step,
            meta_turn=meta_turn,
        )
        response = response.with_followups(followups)
        if response.act in INSERT_OPENING and pending:
            pending[-1] = dataclasses.replace(pending[-1], followups=followups)
        return state, response, events, pending, consumed

    def _followups_for(
        self,
        session: _Session,
        state: ConversationState,
        response: AssistantResponse,
        pending: list[_PendingInsert],
        *,
        variant: str,
        step: int,
        meta_turn: bool,
    ) -> tuple[Followup, ...]:
        pending_need = pending[-1].need if pending else None
        if meta_turn:
            # A meta detour consumed no script step: re-offer the suggestions
            # from the turn that opened the still-pending request (minus the
            # question just asked), re-checked against the current state.
            asked = {u.text for u in state.transcript if u.speaker is Speaker.USER}
            reoffer = pending[-1].followups if pending else ()
            return tuple(
                f
                for f in reoffer
                if f.text not in asked
                and check_alignment(f, state, response, session.ctx, pending_need).aligned
            )
        if response.followups:
            # A live backend may inline suggestions in its structured output;
            # keep the aligned ones and skip the generator round-trip.
            inline = tuple(
                f
                for f in response.followups
                if check_alignment(f, state, response, session.ctx, pending_need).aligned
            )
            if inline:
                return inline[: self.config.followup_max]
        try:
            return generate_followups(
                state,
                response,
                session.ctx,
                session.backend,
                step=step,
                session_key=session.session_id,
                scenario_id=session.scenario.id if session.scenario else None,
                variant=variant,
                ctx_summary=session.ctx_summary,
                pending_need=pending_need,
                config=self.config,
            )
        except NoneGenerated:
            return ()

    # -- views -----------------------------------------------------------------

    def _view(self, session: _Session) -> dict:
        return build_state_view(
            session_id=session.session_id,
            scenario_id=session.scenario.id if session.scenario else None,
            state=session.state,
            ctx=session.ctx,
            last_response=session.last_response,
        )

    def get_state_view(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            return self._view(session)

    # -- replay ------------------------------------------------------------------

    def replay_record(self, record: SessionRecord) -> list[str]:
        return replay_hashes(record, self.config)


def build_state_view(
    *,
    session_id: str,
    scenario_id: str | None,
    state: ConversationState | None,
    ctx: DebugContext | None,
    last_response: AssistantResponse | None,
) -> dict:
    snapshot = state.to_snapshot() if state is not None else {
        "turns": [], "frames": [], "phase": None, "pattern_mode": None,
    }
    open_frames = []
    depth = 0
    done = False
    legal: list[tuple[str, str]] = []
    if state is not None:
        depth = state.depth
        done = state.is_done
        open_frames = [
            {
                "kind": f.kind.value,
                "opener_act": f.opener_act.value,
                "opener_turn": f.opener_turn,
            }
            for i, f in enumerate(state.frames)
            if i in state.open_frame_indices
        ]
        legal = sorted((s.value, a.value) for s, a in legal_next_acts(state))
    context_pane = None
    if ctx is not None:
        context_pane = {
            "exception": ctx.exception.to_dict(),
            "frames": [f.to_dict() for f in ctx.frames[:3]],
        }
    followups = []
    if last_response is not None and not done:
        followups = [f.to_dict() for f in last_response.followups]
    return {
        "session_id": session_id,
        "scenario_id": scenario_id,
        "phase": snapshot["phase"],
        "pattern_mode": snapshot["pattern_mode"],
        "done": done,
        "depth": depth,
        "open_frames": open_frames,
        "turns": snapshot["turns"],
        "frames": snapshot["frames"],
        "followups": followups,
        "context": context_pane,
        "legal_next_acts": legal,
    }


def replay_hashes(record: SessionRecord, config: EngineConfig = DEFAULT_CONFIG) -> list[str]:
    """Recompute per-turn snapshot hashes from the recorded utterances."""
    accept_re = re.compile(config.accept_fix_pattern, re.IGNORECASE)
    state: ConversationState | None = None
    hashes: list[str] = []
    for turn in record.turns:
        utterance = Utterance.from_dict(turn["utterance"])
        if state is None:
            state = open_session(utterance, config.max_expansion_depth)
        else:
            state, _ = apply_user_turn(state, utterance, accept_re)
        if state.pattern_mode is PatternMode.UNSET and record.pattern_mode:
            state = set_pattern_mode(state, PatternMode(record.pattern_mode))
        raw_response = turn.get("response")
        if raw_response:
            assistant_utt = Utterance(
                speaker=Speaker.ASSISTANT,
                text=raw_response["body"],
                act=DialogueAct(raw_response["act"]),
                turn_index=state.next_turn_index,
            )
            state = apply_utterance(state, assistant_utt)
        hashes.append(snapshot_hash(state))
    return hashes


def verify_replay(record: SessionRecord, config: EngineConfig = DEFAULT_CONFIG) -> bool:
    recomputed = replay_hashes(record, config)
    stored = [turn["state_snapshot_hash"] for turn in record.turns]
    return recomputed == stored
