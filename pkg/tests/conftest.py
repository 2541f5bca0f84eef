from __future__ import annotations

import pytest

from dbgchat.conversation import DialogueAct, Speaker, Utterance, open_session
from dbgchat.debugctx import capture_context, make_simulated_adapter
from dbgchat.orchestrator import Orchestrator
from dbgchat.scenarios import load_scenario


def make_utterance(speaker, act, turn_index, text="x", origin=None):
    kwargs = {"origin": origin} if origin is not None else {}
    return Utterance(speaker=speaker, text=text, act=act, turn_index=turn_index, **kwargs)


def primary_request(text="Why did I get this SerializationException?"):
    return Utterance(
        speaker=Speaker.USER, text=text, act=DialogueAct.PRIMARY_REQUEST, turn_index=0
    )


@pytest.fixture
def fresh_state():
    return open_session(primary_request())


@pytest.fixture(scope="session")
def task1_scenario():
    return load_scenario("task1_serialization")


@pytest.fixture(scope="session")
def task2_scenario():
    return load_scenario("task2_overflow")


@pytest.fixture(scope="session")
def warmup_scenario():
    return load_scenario("warmup_index_oob")


@pytest.fixture
def task1_ctx(task1_scenario):
    return capture_context(make_simulated_adapter(task1_scenario))


@pytest.fixture
def task2_ctx(task2_scenario):
    return capture_context(make_simulated_adapter(task2_scenario))


@pytest.fixture
def warmup_ctx(warmup_scenario):
    return capture_context(make_simulated_adapter(warmup_scenario))


@pytest.fixture
def engine(tmp_path):
    return Orchestrator(sessions_dir=tmp_path / "sessions")
