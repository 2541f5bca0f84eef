"""CLI: eval determinism, replay verification, scenario listing, chat loop."""

from __future__ import annotations

import io

import pytest

from dbgchat.cli import main, resolve_scenario_id
from dbgchat.errors import UnknownScenario
from dbgchat.evalharness import EvalMode, run_episode


def test_resolve_scenario_prefixes():
    assert resolve_scenario_id("task1") == "task1_serialization"
    assert resolve_scenario_id("task2") == "task2_overflow"
    assert resolve_scenario_id("warmup") == "warmup_index_oob"
    assert resolve_scenario_id("task1_serialization") == "task1_serialization"
    with pytest.raises(UnknownScenario):
        resolve_scenario_id("task")  # ambiguous
    with pytest.raises(UnknownScenario):
        resolve_scenario_id("zzz")


def test_scenarios_command(capsys):
    assert main(["scenarios"]) == 0
    out = capsys.readouterr().out
    assert "task1_serialization" in out
    assert "task2_overflow" in out


def test_eval_cli_writes_byte_identical_csv(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out in (out_a, out_b):
        code = main(
            [
                "eval",
                "--scenarios", "all",
                "--modes", "full,eager",
                "--out", str(out),
                "--sessions-dir", str(tmp_path / out.stem),
            ]
        )
        assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    table = capsys.readouterr().out
    assert "task2_overflow" in table


def test_eval_rejects_unknown_mode(tmp_path, capsys):
    code = main(
        ["eval", "--modes", "fulll", "--sessions-dir", str(tmp_path / "s")]
    )
    assert code == 2
    assert "unknown mode" in capsys.readouterr().err


def test_replay_command_verifies(tmp_path, capsys):
    record, _ = run_episode(
        "task1_serialization", EvalMode.FULL, sessions_dir=tmp_path / "s"
    )
    path = tmp_path / "s" / f"{record.session_id}.jsonl"
    assert main(["replay", str(path)]) == 0
    out = capsys.readouterr().out
    assert "replay OK" in out
    assert "PrimaryRequest" in out


def test_replay_command_flags_corruption(tmp_path, capsys):
    record, _ = run_episode(
        "task1_serialization", EvalMode.FULL, sessions_dir=tmp_path / "s"
    )
    path = tmp_path / "s" / f"{record.session_id}.jsonl"
    corrupted = path.read_text().replace("serialized is an empty string", "serialized is fine")
    path.write_text(corrupted)
    assert main(["replay", str(path)]) == 1


def test_chat_loop_clicks_followups(tmp_path, capsys, monkeypatch):
    inputs = iter(
        [
            "Why did I get this SerializationException?",
            "1",  # click the likely-answer chip
            "1",
            "1",
            "1",
        ]
    )
    monkeypatch.setattr("builtins.input", lambda *_: next(inputs))
    code = main(
        ["chat", "--scenario", "task1", "--sessions-dir", str(tmp_path / "chat")]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "InfoRequest" in out
    assert "session closed." in out


def test_bare_flags_mean_chat(tmp_path, capsys, monkeypatch):
    inputs = iter(["Why?", "1", "/quit"])
    monkeypatch.setattr("builtins.input", lambda *_: next(inputs))
    code = main(
        ["--scenario", "warmup", "--force-eager", "--sessions-dir", str(tmp_path / "w")]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "FixProposal" in out
