"""Session engine: lifecycle, routing, events, persistence and replay."""

from __future__ import annotations

import json
import threading

import pytest

from dbgchat.conversation import DialogueAct, Origin
from dbgchat.errors import SessionClosed, SessionNotFound, UnknownScenario
from dbgchat.orchestrator import MetricEventKind, Orchestrator
from dbgchat.orchestrator.engine import replay_hashes, verify_replay
from dbgchat.responses import FollowupKind


def start_task1(engine, **kwargs):
    session_id = engine.create_session(scenario_id="task1_serialization", **kwargs)
    result = engine.handle_user_message(
        session_id, "Why did I get this SerializationException when round-tripping a Contact?"
    )
    return session_id, result


def test_unknown_scenario_rejected(engine):
    with pytest.raises(UnknownScenario):
        engine.create_session(scenario_id="nope")


def test_scripted_requires_scenario(engine):
    with pytest.raises(UnknownScenario):
        engine.create_session(scenario_id=None, backend="scripted")


def test_unknown_session(engine):
    with pytest.raises(SessionNotFound):
        engine.handle_user_message("missing", "hi")


def test_turn_zero_task1_collaborative_info_request(engine):
    _, result = start_task1(engine)
    assert result.state_view["pattern_mode"] == "CollaborativeIE"
    assert result.response.act is DialogueAct.INFO_REQUEST
    assert result.state_view["depth"] == 2
    texts = [f["text"] for f in result.state_view["followups"]]
    assert "serialized is an empty string" in texts


def test_force_eager_yields_single_turn_fix(engine):
    session_id = engine.create_session(
        scenario_id="task1_serialization", mode_override="ForceEager"
    )
    result = engine.handle_user_message(session_id, "Why the SerializationException?")
    assert result.state_view["pattern_mode"] == "EagerQA"
    assert result.response.act is DialogueAct.FIX_PROPOSAL
    assert result.state_view["depth"] == 1


def test_full_task1_reaches_accepted_root_fix(engine):
    session_id, result = start_task1(engine)
    replies = [
        ("serialized is an empty string", Origin.FOLLOWUP_CLICK),
        ("Here is the ToJson method: public static string ToJson(...)", Origin.TYPED),
        ("Confirmed — the MemoryStream position equals its length right after WriteObject.",
         Origin.FOLLOWUP_CLICK),
        ("Apply the stream-position fix in ToJson.", Origin.FOLLOWUP_CLICK),
    ]
    for text, origin in replies:
        result = engine.handle_user_message(session_id, text, origin)
    assert result.state_view["done"]
    assert result.response is None

    record = engine.get_record(session_id)
    accepted = record.events_of(MetricEventKind.FIX_ACCEPTED)
    assert len(accepted) == 1
    assert accepted[0].data["fix_id"] == "reset-stream-position"
    localized = record.events_of(MetricEventKind.LOCALIZATION_DECLARED)
    assert localized and localized[0].data["function_name"] == "ToJson"
    assert record.events_of(MetricEventKind.SESSION_CLOSED)


def test_message_to_done_session_rejected(engine):
    session_id = engine.create_session(
        scenario_id="warmup_index_oob", mode_override="ForceEager"
    )
    engine.handle_user_message(session_id, "Index error, why?")
    engine.handle_user_message(session_id, "Apply the loop-bound fix in PrintScores.")
    with pytest.raises(SessionClosed):
        engine.handle_user_message(session_id, "one more thing")


def test_engine_classification_keeps_typed_messages_legal(engine):
    """Typed input is classified so it is always legal for the current stack."""
    session_id, result = start_task1(engine)
    result = engine.handle_user_message(session_id, "How would I even check that?")
    assert result.response.act is DialogueAct.ANSWER  # meta-question answered
    result = engine.handle_user_message(session_id, "serialized is an empty string")
    assert result.state_view["phase"] == "Localization"


def test_followup_click_event_recorded(engine):
    session_id, result = start_task1(engine)
    chip = result.response.followups[0]
    assert chip.kind is FollowupKind.ANSWER_CANDIDATE
    engine.handle_user_message(session_id, chip.text, Origin.FOLLOWUP_CLICK)
    record = engine.get_record(session_id)
    clicks = record.events_of(MetricEventKind.FOLLOWUP_CLICKED)
    assert len(clicks) == 1
    assert clicks[0].data["text"] == chip.text
    turn = record.turns[1]
    assert turn["utterance"]["origin"] == "FollowupClick"
    assert turn["utterance"]["act"] == "InfoProvision"


def test_unknown_click_text_degrades_to_typed(engine):
    session_id, _ = start_task1(engine)
    result = engine.handle_user_message(
        session_id, "something never offered", Origin.FOLLOWUP_CLICK
    )
    record = engine.get_record(session_id)
    assert record.turns[1]["utterance"]["origin"] == "Typed"
    assert not record.events_of(MetricEventKind.FOLLOWUP_CLICKED)
    assert result.response is not None


def test_meta_question_detour_and_resume(engine):
    session_id, first = start_task1(engine)
    meta = next(
        f for f in first.response.followups if f.kind is FollowupKind.META_QUESTION
    )
    detour = engine.handle_user_message(session_id, meta.text, Origin.FOLLOWUP_CLICK)
    assert detour.response.act is DialogueAct.ANSWER
    assert "serialized" in detour.response.body
    assert detour.state_view["depth"] == 2  # meta insert closed, request still open
    # the likely answer is offered again, the spent meta question is not
    texts = [f["text"] for f in detour.state_view["followups"]]
    assert "serialized is an empty string" in texts
    assert meta.text not in texts
    # resume the scripted path to completion
    result = engine.handle_user_message(
        session_id, "serialized is an empty string", Origin.FOLLOWUP_CLICK
    )
    assert result.response.act is DialogueAct.INFO_REQUEST  # asks for ToJson next
    assert result.state_view["phase"] == "Localization"


def test_phase_progression_through_task2(engine):
    session_id = engine.create_session(scenario_id="task2_overflow")
    result = engine.handle_user_message(session_id, "YAMLException with an overflow inside?")
    assert result.state_view["phase"] == "Identification"
    result = engine.handle_user_message(
        session_id, result.response.followups[0].text, Origin.FOLLOWUP_CLICK
    )
    assert result.state_view["phase"] == "Localization"
    result = engine.handle_user_message(
        session_id, result.response.followups[0].text, Origin.FOLLOWUP_CLICK
    )
    assert result.state_view["phase"] == "Comprehension"
    result = engine.handle_user_message(
        session_id, result.response.followups[0].text, Origin.FOLLOWUP_CLICK
    )
    assert result.state_view["phase"] == "Fixing"
    assert result.response.act is DialogueAct.FIX_PROPOSAL
    result = engine.handle_user_message(
        session_id, result.response.followups[0].text, Origin.FOLLOWUP_CLICK
    )
    assert result.state_view["done"]


def test_persistence_is_jsonl_and_replays(engine, tmp_path):
    session_id, _ = start_task1(engine)
    engine.handle_user_message(session_id, "serialized is an empty string", Origin.FOLLOWUP_CLICK)
    path = engine.store.path_for(session_id)
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert lines[0]["type"] == "created"
    kinds = {l["type"] for l in lines}
    assert {"created", "meta", "turn", "event"} <= kinds

    record = engine.get_record(session_id)
    assert verify_replay(record)
    stored = [t["state_snapshot_hash"] for t in record.turns]
    assert replay_hashes(record) == stored


def test_replay_detects_tampering(engine):
    session_id, _ = start_task1(engine)
    record = engine.get_record(session_id)
    record.turns[0]["state_snapshot_hash"] = "0" * 64
    assert not verify_replay(record)


def test_sessions_are_independent(engine):
    a, _ = start_task1(engine)
    b, _ = start_task1(engine)
    assert a != b
    result = engine.handle_user_message(a, "serialized is an empty string", Origin.FOLLOWUP_CLICK)
    assert result.state_view["phase"] == "Localization"
    assert engine.get_state_view(b)["phase"] == "Identification"


def test_concurrent_posts_to_one_session_serialize(engine):
    session_id, first = start_task1(engine)
    results, errors = [], []

    def send(text):
        try:
            results.append(engine.handle_user_message(session_id, text))
        except Exception as exc:  # noqa: BLE001 - collecting for assertion
            errors.append(exc)

    threads = [
        threading.Thread(target=send, args=("serialized is an empty string",)),
        threading.Thread(target=send, args=("How to check the value of serialized during execution?",)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    # one message won (applied in arrival order), the other either succeeded
    # on the new state or was rejected as illegal; the record stays coherent
    record = engine.get_record(session_id)
    assert verify_replay(record)
    assert len(results) + len(errors) == 2


class InlineFollowupBackend:
    """A live-style backend that inlines followups in its structured output."""

    def complete(self, req):
        import json

        from dbgchat.gateway import AgentRole, CompletionResult

        if req.role is AgentRole.HARDNESS:
            return CompletionResult(text="prose", backend_id="fake-live")
        payload = {
            "act": "InfoRequest",
            "body": "Can you provide the value of `serialized` from FromJson?",
            "payload": {"kind": "VariableValue", "target": "serialized"},
            "followups": [
                {"text": "serialized is an empty string", "kind": "AnswerCandidate"},
                {"text": "How do I inspect serialized while paused?", "kind": "MetaQuestion"},
                {"text": "Tell me about JsonSerializer instead", "kind": "NewTopic"},
            ],
        }
        return CompletionResult(
            text="```json\n" + json.dumps(payload) + "\n```", backend_id="fake-live"
        )


def test_inline_followups_are_filtered_and_used(tmp_path):
    engine = Orchestrator(sessions_dir=tmp_path, live_backend=InlineFollowupBackend())
    session_id = engine.create_session(scenario_id="task1_serialization", backend="live")
    result = engine.handle_user_message(session_id, "Why the SerializationException?")
    texts = [f.text for f in result.response.followups]
    assert "serialized is an empty string" in texts
    assert "How do I inspect serialized while paused?" in texts
    # the off-topic NewTopic suggestion fails alignment while the insert is open
    assert "Tell me about JsonSerializer instead" not in texts


class FlakyBackend:
    """Fails the first responder call, then behaves."""

    def __init__(self):
        self.calls = 0

    def complete(self, req):
        from dbgchat.errors import BackendUnavailable
        from dbgchat.gateway import AgentRole, CompletionResult

        if req.role is AgentRole.HARDNESS:
            return CompletionResult(text='{"mode": "Collaborative", "confidence": 0.9, "rationale": "r"}', backend_id="flaky")
        self.calls += 1
        if self.calls == 1:
            raise BackendUnavailable("first call drops")
        if req.role is AgentRole.FOLLOWUP:
            return CompletionResult(text="[]", backend_id="flaky")
        return CompletionResult(
            text='{"act": "InfoRequest", "body": "Can you provide the value of serialized?", '
            '"payload": {"kind": "VariableValue", "target": "serialized"}}',
            backend_id="flaky",
        )


def test_failed_assistant_turn_rolls_back(tmp_path):
    from dbgchat.errors import GatewayFailure

    engine = Orchestrator(sessions_dir=tmp_path, live_backend=FlakyBackend())
    session_id = engine.create_session(scenario_id="task1_serialization", backend="live")
    with pytest.raises(GatewayFailure):
        engine.handle_user_message(session_id, "Why the SerializationException?")
    # nothing was committed: the same message replays cleanly as turn 0
    result = engine.handle_user_message(session_id, "Why the SerializationException?")
    assert result.response.act is DialogueAct.INFO_REQUEST
    record = engine.get_record(session_id)
    assert len(record.turns) == 1
    assert record.turns[0]["utterance"]["turn_index"] == 0
    assert verify_replay(record)


class UnstructuredLiveBackend:
    """Stands in for a live endpoint that answers in loose prose."""

    def complete(self, req):
        from dbgchat.gateway import AgentRole, CompletionResult

        texts = {
            AgentRole.HARDNESS: "not json at all",
            AgentRole.COLLABORATIVE: "Could you provide the value of serialized?",
            AgentRole.FOLLOWUP: '[{"text": "serialized is probably empty", "kind": "AnswerCandidate"}]',
        }
        return CompletionResult(text=texts.get(req.role, "ok"), backend_id="fake-live")


def test_live_backend_session_with_unstructured_output(tmp_path):
    engine = Orchestrator(sessions_dir=tmp_path, live_backend=UnstructuredLiveBackend())
    session_id = engine.create_session(scenario_id="task1_serialization", backend="live")
    result = engine.handle_user_message(session_id, "Why the SerializationException?")
    # heuristic classification: library frame on top -> collaborative
    assert result.state_view["pattern_mode"] == "CollaborativeIE"
    # prose output classified by infer_act, with a grounded synthesized payload
    assert result.response.act is DialogueAct.INFO_REQUEST
    assert result.state_view["depth"] == 2
    kinds = {f["kind"] for f in result.state_view["followups"]}
    assert "AnswerCandidate" in kinds and "MetaQuestion" in kinds


def test_audit_passes_on_every_scripted_transcript(engine):
    from dbgchat.evalharness import EvalMode, SimulatedUserPolicy, audit_record, run_episode

    for scenario_id in ("warmup_index_oob", "task1_serialization", "task2_overflow"):
        for mode in (EvalMode.FULL, EvalMode.EAGER_ONLY):
            record, _ = run_episode(
                scenario_id, mode, SimulatedUserPolicy(), engine=engine
            )
            assert audit_record(record) == []
            assert verify_replay(record)


def test_task1_replay_shows_two_closed_insert_expansions(engine):
    """The full task1 transcript opens and closes exactly two inserts, then the base."""
    from dbgchat.conversation import (
        FrameKind,
        FrameStatus,
        PatternMode,
        Utterance,
        apply_utterance,
        open_session,
        set_pattern_mode,
    )
    from dbgchat.conversation import DialogueAct as Act
    from dbgchat.conversation import Speaker
    from dbgchat.evalharness import EvalMode, run_episode
    from dbgchat.orchestrator.engine import apply_user_turn
    import re

    record, _ = run_episode("task1_serialization", EvalMode.FULL, engine=engine)
    accept_re = re.compile(engine.config.accept_fix_pattern, re.IGNORECASE)
    state = None
    for turn in record.turns:
        utterance = Utterance.from_dict(turn["utterance"])
        if state is None:
            state = open_session(utterance)
        else:
            state, _ = apply_user_turn(state, utterance, accept_re)
        if state.pattern_mode is PatternMode.UNSET:
            state = set_pattern_mode(state, PatternMode(record.pattern_mode))
        response = turn.get("response")
        if response:
            state = apply_utterance(
                state,
                Utterance(
                    speaker=Speaker.ASSISTANT,
                    text=response["body"],
                    act=Act(response["act"]),
                    turn_index=state.next_turn_index,
                ),
            )
    assert state.is_done
    inserts = [f for f in state.frames if f.kind is FrameKind.INSERT_EXPANSION]
    assert len(inserts) == 2
    assert all(f.status is FrameStatus.CLOSED for f in inserts)
    base = state.frames[0]
    assert base.status is FrameStatus.CLOSED
    assert all(base.closer_turn >= f.closer_turn for f in inserts)
