"""Append-only session persistence: one JSONL file per session.

Line kinds: "created" (session header), "meta" (classification outcome),
"turn" (user utterance + assistant response + state snapshot hash) and
"event" (metric events). A session record is the fold of its lines; replay
reconstructs conversation state from the recorded utterances alone and must
reproduce every stored snapshot hash.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from ..conversation import ConversationState
from ..errors import SessionNotFound


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def snapshot_hash(state: ConversationState) -> str:
    return hashlib.sha256(canonical_json(state.to_snapshot()).encode("utf-8")).hexdigest()


class MetricEventKind(str, Enum):
    PROMPT_SENT = "PromptSent"
    FOLLOWUP_CLICKED = "FollowupClicked"
    LOCALIZATION_DECLARED = "LocalizationDeclared"
    FIX_PROPOSED = "FixProposed"
    FIX_ACCEPTED = "FixAccepted"
    SESSION_CLOSED = "SessionClosed"


@dataclass(frozen=True)
class MetricEvent:
    kind: MetricEventKind
    turn_index: int
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "turn_index": self.turn_index, "data": self.data}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricEvent":
        return cls(
            kind=MetricEventKind(data["kind"]),
            turn_index=data["turn_index"],
            data=data.get("data", {}),
        )


@dataclass
class SessionRecord:
    session_id: str
    scenario_id: str | None
    created_at: str
    backend: str = "scripted"
    mode_override: str | None = None
    pattern_mode: str | None = None
    verdict: dict | None = None
    turns: list[dict] = field(default_factory=list)
    metrics_events: list[MetricEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "scenario_id": self.scenario_id,
            "created_at": self.created_at,
            "backend": self.backend,
            "mode_override": self.mode_override,
            "pattern_mode": self.pattern_mode,
            "verdict": self.verdict,
            "turns": self.turns,
            "metrics_events": [e.to_dict() for e in self.metrics_events],
        }

    def events_of(self, kind: MetricEventKind) -> list[MetricEvent]:
        return [e for e in self.metrics_events if e.kind is kind]

    @classmethod
    def from_lines(cls, lines: list[dict]) -> "SessionRecord":
        record: SessionRecord | None = None
        for line in lines:
            kind = line.get("type")
            if kind == "created":
                record = cls(
                    session_id=line["session_id"],
                    scenario_id=line.get("scenario_id"),
                    created_at=line.get("created_at", ""),
                    backend=line.get("backend", "scripted"),
                    mode_override=line.get("mode_override"),
                )
            elif record is None:
                raise SessionNotFound("record does not start with a created line")
            elif kind == "meta":
                record.pattern_mode = line.get("pattern_mode", record.pattern_mode)
                record.verdict = line.get("verdict", record.verdict)
            elif kind == "turn":
                record.turns.append(
                    {
                        "utterance": line["utterance"],
                        "response": line.get("response"),
                        "state_snapshot_hash": line["state_snapshot_hash"],
                    }
                )
            elif kind == "event":
                record.metrics_events.append(MetricEvent.from_dict(line["event"]))
        if record is None:
            raise SessionNotFound("empty session record")
        return record


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Flushed, append-only JSONL persistence under one directory."""

    def __init__(self, directory: str | Path):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path_for(self, session_id: str) -> Path:
        return self._dir / f"{session_id}.jsonl"

    def append(self, session_id: str, line: dict) -> None:
        data = canonical_json(line) + "\n"
        with self._lock:
            with open(self.path_for(session_id), "a", encoding="utf-8") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())

    def load(self, session_id: str) -> SessionRecord:
        path = self.path_for(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        return self.load_file(path)

    @staticmethod
    def load_file(path: str | Path) -> SessionRecord:
        lines = []
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if raw:
                    lines.append(json.loads(raw))
        return SessionRecord.from_lines(lines)

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self._dir.glob("*.jsonl"))
