"""Unit tests for the turn-taking state machine."""

import pytest

from dbgchat.conversation import (
    ConversationState,
    DebugPhase,
    DialogueAct,
    FrameKind,
    FrameStatus,
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
from dbgchat.errors import (
    DepthExceeded,
    IllegalPhaseJump,
    IllegalTransition,
    OpenInsertsRemain,
    RejectedAct,
)

from .conftest import make_utterance, primary_request


def test_open_session_starts_base_pair():
    state = open_session(primary_request())
    assert len(state.frames) == 1
    assert state.frames[0].kind is FrameKind.BASE_PAIR
    assert state.frames[0].status is FrameStatus.OPEN
    assert state.depth == 1
    assert state.phase is DebugPhase.IDENTIFICATION
    assert state.pattern_mode is PatternMode.UNSET


def test_open_session_task2_style_request():
    state = open_session(primary_request("How do I fix DeserializeIntegerHelper overflow?"))
    assert state.depth == 1
    assert state.phase is DebugPhase.IDENTIFICATION


def test_open_session_rejects_non_primary_act():
    with pytest.raises(RejectedAct):
        open_session(make_utterance(Speaker.USER, DialogueAct.ACKNOWLEDGEMENT, 0))


def test_assistant_speaker_cannot_utter_primary_request():
    with pytest.raises(RejectedAct):
        Utterance(
            speaker=Speaker.ASSISTANT,
            text="hi",
            act=DialogueAct.PRIMARY_REQUEST,
            turn_index=0,
        )


def test_followup_click_origin_is_user_only():
    with pytest.raises(RejectedAct):
        Utterance(
            speaker=Speaker.ASSISTANT,
            text="x",
            act=DialogueAct.ANSWER,
            turn_index=1,
            origin=Origin.FOLLOWUP_CLICK,
        )


def test_info_request_opens_insert(fresh_state):
    state = apply_utterance(
        fresh_state,
        make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1, "value of serialized?"),
    )
    assert state.depth == 2
    assert state.top_open.kind is FrameKind.INSERT_EXPANSION
    assert state.top_open.opened_by_assistant


def test_meta_question_nests_another_insert(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1)
    )
    state = apply_utterance(
        state,
        make_utterance(
            Speaker.USER,
            DialogueAct.META_QUESTION,
            2,
            "How to check the value of serialized during execution?",
        ),
    )
    assert state.depth == 3
    assert not state.top_open.opened_by_assistant


def test_info_provision_closes_assistant_insert(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1)
    )
    state = apply_utterance(
        state,
        make_utterance(Speaker.USER, DialogueAct.INFO_PROVISION, 2, "serialized is an empty string"),
    )
    assert state.depth == 1
    closed = state.frames[1]
    assert closed.status is FrameStatus.CLOSED
    assert closed.closer_turn == 2


def test_assistant_answer_closes_meta_insert(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1)
    )
    state = apply_utterance(state, make_utterance(Speaker.USER, DialogueAct.META_QUESTION, 2))
    state = apply_utterance(state, make_utterance(Speaker.ASSISTANT, DialogueAct.ANSWER, 3))
    assert state.depth == 2  # back to the original information request
    assert state.top_open.opened_by_assistant


def test_answer_at_depth_one_closes_base(fresh_state):
    state = apply_utterance(fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.ANSWER, 1))
    assert state.is_done
    assert state.phase is DebugPhase.DONE


def test_assistant_cannot_answer_own_insert(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1)
    )
    state = apply_utterance(state, make_utterance(Speaker.USER, DialogueAct.ACKNOWLEDGEMENT, 2))
    with pytest.raises(IllegalTransition):
        apply_utterance(state, make_utterance(Speaker.ASSISTANT, DialogueAct.ANSWER, 3))


def test_depth_limit(fresh_state):
    state = fresh_state
    state = apply_utterance(state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1))
    state = apply_utterance(state, make_utterance(Speaker.USER, DialogueAct.META_QUESTION, 2))
    state = apply_utterance(state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 3))
    assert state.depth == 4
    with pytest.raises(DepthExceeded):
        apply_utterance(state, make_utterance(Speaker.USER, DialogueAct.META_QUESTION, 4))


def test_turn_index_must_be_contiguous(fresh_state):
    with pytest.raises(IllegalTransition):
        apply_utterance(fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.ANSWER, 5))


def test_speakers_alternate(fresh_state):
    with pytest.raises(IllegalTransition):
        apply_utterance(fresh_state, make_utterance(Speaker.USER, DialogueAct.ACKNOWLEDGEMENT, 1))


def test_fix_proposal_keeps_stack(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.FIX_PROPOSAL, 1)
    )
    assert state.depth == 1
    assert not state.is_done


def test_close_base_requires_closed_inserts(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1)
    )
    with pytest.raises(OpenInsertsRemain):
        close_base(state, fix_accepted=True)


def test_close_base_marks_done(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.FIX_PROPOSAL, 1)
    )
    state = apply_utterance(state, make_utterance(Speaker.USER, DialogueAct.ACKNOWLEDGEMENT, 2))
    state = close_base(state, fix_accepted=True)
    assert state.is_done
    assert state.phase is DebugPhase.DONE
    base = state.frames[0]
    assert base.status is FrameStatus.CLOSED
    assert base.closer_turn > base.opener_turn


def test_legal_next_acts_fresh_session(fresh_state):
    legal = legal_next_acts(fresh_state)
    assert (Speaker.ASSISTANT, DialogueAct.INFO_REQUEST) in legal
    assert (Speaker.ASSISTANT, DialogueAct.ANSWER) in legal
    assert (Speaker.ASSISTANT, DialogueAct.FIX_PROPOSAL) in legal
    assert all(speaker is Speaker.ASSISTANT for speaker, _ in legal)


def test_legal_next_acts_on_assistant_insert(fresh_state):
    state = apply_utterance(
        fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1)
    )
    legal = legal_next_acts(state)
    assert (Speaker.USER, DialogueAct.INFO_PROVISION) in legal
    assert (Speaker.USER, DialogueAct.META_QUESTION) in legal


def test_legal_next_acts_done_is_empty(fresh_state):
    state = apply_utterance(fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.ANSWER, 1))
    assert legal_next_acts(state) == frozenset()


def test_advance_phase_table(fresh_state):
    state = advance_phase(fresh_state, PhaseEvidence.EXCEPTION_UNDERSTOOD)
    assert state.phase is DebugPhase.LOCALIZATION
    state = advance_phase(state, PhaseEvidence.ROOT_FRAME_NAMED)
    assert state.phase is DebugPhase.COMPREHENSION
    state = advance_phase(state, PhaseEvidence.CAUSE_EXPLAINED)
    assert state.phase is DebugPhase.FIXING


def test_advance_phase_rejects_jump(fresh_state):
    state = advance_phase(fresh_state, PhaseEvidence.EXCEPTION_UNDERSTOOD)
    with pytest.raises(IllegalPhaseJump):
        advance_phase(state, PhaseEvidence.CAUSE_EXPLAINED)


def test_advance_phase_stale_evidence_is_noop(fresh_state):
    state = advance_phase(fresh_state, PhaseEvidence.EXCEPTION_UNDERSTOOD)
    again = advance_phase(state, PhaseEvidence.EXCEPTION_UNDERSTOOD)
    assert again.phase is DebugPhase.LOCALIZATION


def test_advance_phase_rejected_once_done(fresh_state):
    state = apply_utterance(fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.ANSWER, 1))
    with pytest.raises(IllegalPhaseJump):
        advance_phase(state, PhaseEvidence.EXCEPTION_UNDERSTOOD)


def test_comprehension_can_return_to_localization(fresh_state):
    state = advance_phase(fresh_state, PhaseEvidence.EXCEPTION_UNDERSTOOD)
    state = advance_phase(state, PhaseEvidence.ROOT_FRAME_NAMED)
    state = advance_phase(state, PhaseEvidence.DEEPER_CAUSE_SUSPECTED)
    assert state.phase is DebugPhase.LOCALIZATION
    # and forward again
    state = advance_phase(state, PhaseEvidence.ROOT_FRAME_NAMED)
    assert state.phase is DebugPhase.COMPREHENSION


def test_pattern_mode_write_once(fresh_state):
    state = set_pattern_mode(fresh_state, PatternMode.COLLABORATIVE_IE)
    with pytest.raises(IllegalTransition):
        set_pattern_mode(state, PatternMode.EAGER_QA)


def test_operations_are_pure(fresh_state):
    before = fresh_state.to_snapshot()
    apply_utterance(fresh_state, make_utterance(Speaker.ASSISTANT, DialogueAct.INFO_REQUEST, 1))
    assert fresh_state.to_snapshot() == before


def test_snapshot_field_names(fresh_state):
    snapshot = fresh_state.to_snapshot()
    assert set(snapshot) == {"turns", "frames", "phase", "pattern_mode"}
    assert set(snapshot["turns"][0]) == {"speaker", "text", "act", "turn_index", "origin"}
    assert set(snapshot["frames"][0]) == {
        "kind", "opener_turn", "opener_act", "status", "closer_turn",
    }
