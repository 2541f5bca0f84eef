"""Engine configuration.

All numeric knobs live here with their defaults. Role instructions for the
live backend are configuration, not ground truth: they can be replaced
wholesale without touching engine logic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


def _default_role_instructions() -> dict[str, str]:
    return {
        "hardness": (
            "You triage a debugging request. Given the exception, call stack and "
            "locals, decide whether the bug can be resolved with a single complete "
            "answer (OneShot) or needs a collaborative multi-turn investigation "
            "(Collaborative). Prefer Collaborative whenever the root cause is not "
            "visible in the provided context. Reply with fenced JSON: "
            '{"mode": "OneShot"|"Collaborative", "confidence": 0..1, "rationale": "..."}'
        ),
        "eager": (
            "You are a debugging assistant answering in a single turn. Explain the "
            "failure and propose a concrete fix with a diff. Reply with fenced JSON: "
            '{"act": "FixProposal", "body": "...", "payload": {"fix_id": null, '
            '"diff_text": "...", "explanation": "..."}}'
        ),
        "collaborative": (
            "You are a debugging assistant working step by step with the developer. "
            "Produce exactly one dialogue act per turn: ask for one piece of missing "
            "information (InfoRequest), give debugger instructions (InstructionStep), "
            "state a hypothesis with a concrete check (HypothesisProposal), answer a "
            "question the developer asked (Answer), or, only once the cause is "
            "understood and confirmed, propose a fix (FixProposal). Never propose a "
            "fix before the cause is confirmed. Only reference variables, methods and "
            "file locations that appear in the provided context or conversation. "
            "Reply with fenced JSON: {\"act\": ..., \"body\": ..., \"payload\": ...}"
        ),
        "followup": (
            "Suggest 1-3 utterances the developer is likely to say next, continuing "
            "the current exchange rather than opening unrelated questions. When the "
            "assistant just asked for information, include one likely answer "
            "(AnswerCandidate) and one question about how to obtain the answer "
            "(MetaQuestion). Each suggestion must mention an identifier from the "
            "conversation or debugger context. Reply with fenced JSON: "
            '[{"text": "...", "kind": "AnswerCandidate"|"MetaQuestion"|"NewTopic"}]'
        ),
    }


@dataclass
class EngineConfig:
    # conversation state machine
    max_expansion_depth: int = 4

    # debug context capture and summarization
    frame_fetch_limit: int = 32
    fetch_locals_depth: int = 3
    value_render_limit: int = 200
    min_summary_budget: int = 128
    context_budget_chars: int = 4000
    # Spawn a real adapter process instead of the in-process simulator;
    # "{scenario_id}" in the template is substituted per session.
    adapter_command: str | None = None

    # gateway
    gateway_budget_chars: int = 12000
    live_endpoint: str | None = None
    live_api_key: str | None = None
    live_model: str | None = None
    live_retry: int = 1
    live_timeout_s: float = 30.0

    # responders
    one_shot_threshold: float = 0.7
    simple_exception_types: tuple[str, ...] = (
        "IndexOutOfRange",
        "NullReference",
        "DivideByZero",
    )
    library_path_prefixes: tuple[str, ...] = ("lib/", "external/")
    library_function_prefixes: tuple[str, ...] = ("System.", "Microsoft.")

    # followups
    followup_max: int = 3

    # orchestrator
    sessions_dir: str = "sessions"
    accept_fix_pattern: str = r"\b(apply|accept|yes|lgtm|looks good|go ahead|ship it)\b"

    role_instructions: dict[str, str] = field(default_factory=_default_role_instructions)

    @classmethod
    def from_env(cls, **overrides) -> "EngineConfig":
        """Build a config, filling live-backend settings from the environment."""
        cfg = cls(**overrides)
        cfg.live_endpoint = cfg.live_endpoint or os.environ.get("LLM_ENDPOINT")
        cfg.live_api_key = cfg.live_api_key or os.environ.get("LLM_API_KEY")
        cfg.live_model = cfg.live_model or os.environ.get("LLM_MODEL")
        return cfg


DEFAULT_CONFIG = EngineConfig()
