"""Completion backends and prompt assembly.

Two backends share one interface: a deterministic scripted backend that
resolves completions from a scenario's script table by (scenario, role,
step), and a live backend speaking a configurable HTTP chat-completion
endpoint. Tests and the evaluation harness run entirely on the scripted
backend; nothing in the engine depends on which one is plugged in.

`complete` is referentially transparent for the scripted backend: the step
counter is part of the request (the orchestrator tracks one per session and
role), so identical requests always yield identical text.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import httpx

from .config import DEFAULT_CONFIG, EngineConfig
from .conversation import ConversationState, Speaker
from .errors import BackendUnavailable, BudgetExceeded, ScriptExhausted


class AgentRole(str, Enum):
    HARDNESS = "hardness"
    EAGER = "eager"
    COLLABORATIVE = "collaborative"
    FOLLOWUP = "followup"


class Determinism(str, Enum):
    DETERMINISTIC = "Deterministic"
    SAMPLED = "Sampled"


_SCHEMA_HINTS = {
    AgentRole.HARDNESS: (
        'Output fenced JSON: {"mode": "OneShot"|"Collaborative", '
        '"confidence": number, "rationale": string}'
    ),
    AgentRole.EAGER: (
        'Output fenced JSON: {"act": "FixProposal", "body": string, '
        '"payload": {"fix_id": string|null, "diff_text": string, "explanation": string}}'
    ),
    AgentRole.COLLABORATIVE: (
        'Output fenced JSON: {"act": string, "body": string, "payload": object|null}'
    ),
    AgentRole.FOLLOWUP: (
        'Output fenced JSON: [{"text": string, '
        '"kind": "AnswerCandidate"|"MetaQuestion"|"NewTopic"}]'
    ),
}


@dataclass(frozen=True)
class PromptBundle:
    role_instructions: str
    context_summary: str
    transcript_window: tuple[str, ...]
    output_schema_hint: str

    @property
    def total_chars(self) -> int:
        fixed = len(self.role_instructions) + len(self.context_summary) + len(
            self.output_schema_hint
        )
        return fixed + sum(len(t) + 1 for t in self.transcript_window)


@dataclass(frozen=True)
class CompletionRequest:
    bundle: PromptBundle
    role: AgentRole
    determinism: Determinism = Determinism.DETERMINISTIC
    # Routing metadata for the scripted backend; the live backend ignores it.
    session_key: str = ""
    scenario_id: str | None = None
    variant: str | None = None
    step: int = 0


@dataclass(frozen=True)
class CompletionResult:
    text: str
    backend_id: str
    latency_ms: float = 0.0


class CompletionBackend(Protocol):
    def complete(self, req: CompletionRequest) -> CompletionResult: ...


def render_turn(speaker: Speaker, text: str) -> str:
    return f"{speaker.value}: {text}"


def assemble_prompt(
    role: AgentRole,
    state: ConversationState | None,
    ctx_summary: str,
    config: EngineConfig = DEFAULT_CONFIG,
) -> PromptBundle:
    """Pack instructions, context and the longest transcript suffix that fits.

    Turns are never reordered: the window is always a contiguous suffix of
    the transcript, dropping oldest turns first.
    """
    instructions = config.role_instructions[role.value]
    hint = _SCHEMA_HINTS[role]
    budget = config.gateway_budget_chars
    fixed = len(instructions) + len(ctx_summary) + len(hint)
    if fixed > budget:
        raise BudgetExceeded(f"instructions + context occupy {fixed} of {budget} chars")

    window: list[str] = []
    remaining = budget - fixed
    transcript = state.transcript if state is not None else ()
    for utterance in reversed(transcript):
        rendered = render_turn(utterance.speaker, utterance.text)
        cost = len(rendered) + 1
        if cost > remaining:
            break
        window.append(rendered)
        remaining -= cost
    window.reverse()
    return PromptBundle(
        role_instructions=instructions,
        context_summary=ctx_summary,
        transcript_window=tuple(window),
        output_schema_hint=hint,
    )


def fence_json(obj) -> str:
    return "```json\n" + json.dumps(obj, indent=2, ensure_ascii=False) + "\n```"


@dataclass
class ScriptedBackend:
    """Resolves completions from scenario script tables.

    Lookup key: (scenario id, agent role, step), with a per-pattern-mode
    variant for the follow-up tables. Missing entries raise ScriptExhausted,
    which signals a test/scenario mismatch rather than a model failure.
    """

    scenarios: dict[str, dict] = field(default_factory=dict)
    backend_id: str = "scripted"

    def register(self, scenario_id: str, scripted_llm: dict) -> None:
        self.scenarios[scenario_id] = scripted_llm

    def _table(self, req: CompletionRequest):
        if req.scenario_id is None or req.scenario_id not in self.scenarios:
            raise ScriptExhausted(f"no script registered for scenario {req.scenario_id!r}")
        script = self.scenarios[req.scenario_id]
        if req.role is AgentRole.HARDNESS:
            entry = script.get("hardness")
            return [entry] if entry is not None else []
        if req.role is AgentRole.FOLLOWUP:
            variant = req.variant or "collaborative"
            return script.get("followups", {}).get(variant, [])
        return script.get(req.role.value, [])

    def complete(self, req: CompletionRequest) -> CompletionResult:
        table = self._table(req)
        if not 0 <= req.step < len(table):
            raise ScriptExhausted(
                f"scenario {req.scenario_id!r} has no {req.role.value} entry for step {req.step}"
            )
        return CompletionResult(text=fence_json(table[req.step]), backend_id=self.backend_id)


class LiveBackend:
    """HTTP chat-completion client. Endpoint, model and key come from config."""

    backend_id = "live"

    def __init__(self, config: EngineConfig = DEFAULT_CONFIG, transport: httpx.BaseTransport | None = None):
        if not config.live_endpoint:
            raise BackendUnavailable("LLM_ENDPOINT is not configured")
        self._config = config
        headers = {}
        if config.live_api_key:
            headers["Authorization"] = f"Bearer {config.live_api_key}"
        self._client = httpx.Client(
            headers=headers, timeout=config.live_timeout_s, transport=transport
        )

    def _messages(self, bundle: PromptBundle) -> list[dict]:
        system = bundle.role_instructions + "\n\n" + bundle.output_schema_hint
        parts = []
        if bundle.context_summary:
            parts.append("Debugger context:\n" + bundle.context_summary)
        if bundle.transcript_window:
            parts.append("Conversation so far:\n" + "\n".join(bundle.transcript_window))
        parts.append("Produce your next output now.")
        return [
            {"role": "system", "content": system},
            {"role": "user", "content": "\n\n".join(parts)},
        ]

    @staticmethod
    def _extract_text(data: dict) -> str:
        choices = data.get("choices") or []
        if choices:
            first = choices[0]
            message = first.get("message") or {}
            if isinstance(message.get("content"), str):
                return message["content"]
            if isinstance(first.get("text"), str):
                return first["text"]
        raise BackendUnavailable("no completion text in response")

    def complete(self, req: CompletionRequest) -> CompletionResult:
        payload = {
            "model": self._config.live_model or "default",
            "messages": self._messages(req.bundle),
        }
        if req.determinism is Determinism.DETERMINISTIC:
            payload["temperature"] = 0
        attempts = 1 + max(0, self._config.live_retry)
        start = time.monotonic()
        last_error: Exception | None = None
        for _ in range(attempts):
            try:
                response = self._client.post(self._config.live_endpoint, json=payload)
                response.raise_for_status()
                text = self._extract_text(response.json())
                latency = (time.monotonic() - start) * 1000.0
                return CompletionResult(text=text, backend_id=self.backend_id, latency_ms=latency)
            except (httpx.HTTPError, ValueError, BackendUnavailable) as exc:
                last_error = exc
        raise BackendUnavailable(f"live backend failed: {last_error}")
