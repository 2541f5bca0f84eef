"""Scenario-driven policy evaluation with a simulated user.

Episodes drive complete sessions against the scripted backend: the simulated
user answers information requests with the scenario's recorded values,
executes debugger instructions through the simulated adapter, confirms
hypotheses, and accepts fixes per its policy (Cooperative accepts only the
root-cause fix; Terse accepts any eligible fix). The report compares the
full pattern-aware engine against an eager-only ablation; it asserts
directions, never human-study magnitudes.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import re

from .config import DEFAULT_CONFIG, EngineConfig
from .conversation import (
    ConversationState,
    DebugPhase,
    DialogueAct,
    Origin,
    PatternMode,
    Speaker,
    Utterance,
    apply_utterance,
    open_session,
    set_pattern_mode,
)
from .debugctx import observe_at_breakpoint
from .debugctx.model import SourceLocation
from .errors import DbgchatError, ScriptExhausted
from .orchestrator import MetricEventKind, Orchestrator, SessionRecord
from .responses import (
    AssistantResponse,
    FollowupKind,
    InfoNeed,
    InfoNeedKind,
    Instruction,
    StepAction,
)
from .scenarios import FixKind, Scenario, load_scenario

REJECT_TEXT = (
    "That only hides the symptom. I want the underlying cause found and fixed first."
)


class EvalMode(str, Enum):
    FULL = "full"
    EAGER_ONLY = "eager"

    @property
    def mode_override(self) -> str | None:
        return "ForceEager" if self is EvalMode.EAGER_ONLY else None


class Cooperation(str, Enum):
    COOPERATIVE = "Cooperative"
    TERSE = "Terse"


@dataclass
class SimulatedUserPolicy:
    cooperation: Cooperation = Cooperation.COOPERATIVE
    followup_click_prob: float = 1.0
    max_turns: int = 12


@dataclass(frozen=True)
class EpisodeRow:
    scenario: str
    mode: str
    localized: bool
    fixed: bool
    prompts: int
    followups_used: int
    assistant_turns: int

    def as_csv_row(self) -> list[str]:
        return [
            self.scenario,
            self.mode,
            str(self.localized).lower(),
            str(self.fixed).lower(),
            str(self.prompts),
            str(self.followups_used),
            str(self.assistant_turns),
        ]


CSV_COLUMNS = [
    "scenario",
    "mode",
    "localized",
    "fixed",
    "prompts",
    "followups_used",
    "assistant_turns",
]


class SimulatedUser:
    """Deterministic (given a seed) reply policy over assistant responses."""

    def __init__(self, policy: SimulatedUserPolicy, scenario: Scenario, adapter, rng: random.Random):
        self.policy = policy
        self.scenario = scenario
        self.adapter = adapter
        self.rng = rng

    def _click(self) -> bool:
        if self.policy.followup_click_prob >= 1.0:
            return True
        return self.rng.random() < self.policy.followup_click_prob

    def _pick(self, response: AssistantResponse, kind: FollowupKind, contains: str | None = None):
        for followup in response.followups:
            if followup.kind is not kind:
                continue
            if contains is not None and contains.lower() not in followup.text.lower():
                continue
            return followup
        return None

    def reply(self, response: AssistantResponse) -> tuple[str, Origin]:
        act = response.act
        if act is DialogueAct.INFO_REQUEST:
            return self._answer_info_request(response)
        if act is DialogueAct.INSTRUCTION_STEP:
            return self._execute_instruction(response)
        if act is DialogueAct.HYPOTHESIS_PROPOSAL:
            return self._confirm_hypothesis(response)
        if act is DialogueAct.FIX_PROPOSAL:
            return self._judge_fix(response)
        # An Answer mid-conversation (e.g. to a meta-question): acknowledge.
        return "Understood, continuing.", Origin.TYPED

    def _answer_info_request(self, response: AssistantResponse) -> tuple[str, Origin]:
        need = response.payload if isinstance(response.payload, InfoNeed) else None
        candidate = self._pick(response, FollowupKind.ANSWER_CANDIDATE)
        if candidate is not None and self._click():
            return candidate.text, Origin.FOLLOWUP_CLICK
        if need is None:
            return "Here is what I can see in the debugger.", Origin.TYPED
        if need.kind is InfoNeedKind.METHOD_SOURCE:
            source = self.scenario.method_source(need.target)
            if source is None:
                return f"I could not find {need.target}.", Origin.TYPED
            return f"Here is {need.target}:\n```csharp\n{source}\n```", Origin.TYPED
        value = self.scenario.lookup_value(need.target)
        if value is None:
            return f"I cannot find {need.target} in the debugger.", Origin.TYPED
        rendered = value if value else "an empty string"
        return f"{need.target} is {rendered}", Origin.TYPED

    def _execute_instruction(self, response: AssistantResponse) -> tuple[str, Origin]:
        steps = response.payload.steps if isinstance(response.payload, Instruction) else ()
        location: SourceLocation | None = None
        watch: list[str] = []
        for step in steps:
            if step.action in (StepAction.SET_BREAKPOINT, StepAction.RUN_TO_BREAKPOINT):
                location = location or step.location
            if step.action is StepAction.INSPECT_VARIABLE and step.variable:
                watch.append(step.variable)
        observed = []
        if self.adapter is not None and location is not None and watch:
            try:
                observed = observe_at_breakpoint(self.adapter, location, watch)
            except DbgchatError:
                observed = []
        candidate = self._pick(response, FollowupKind.ANSWER_CANDIDATE)
        if candidate is not None and self._click():
            values_match = all(b.rendered_value in candidate.text for b in observed)
            if not observed or values_match:
                return candidate.text, Origin.FOLLOWUP_CLICK
        if observed and location is not None:
            report = ", ".join(f"{b.name} is {b.rendered_value}" for b in observed)
            return f"When the breakpoint at {location.key()} hits, {report}.", Origin.TYPED
        return "I ran the steps; nothing new to report.", Origin.TYPED

    def _confirm_hypothesis(self, response: AssistantResponse) -> tuple[str, Origin]:
        candidate = self._pick(response, FollowupKind.NEW_TOPIC, contains="confirm")
        if candidate is not None and self._click():
            return candidate.text, Origin.FOLLOWUP_CLICK
        return "Confirmed: that matches what the debugger shows.", Origin.TYPED

    def _judge_fix(self, response: AssistantResponse) -> tuple[str, Origin]:
        fix_id = getattr(response.payload, "fix_id", None)
        fix = self.scenario.fix_by_id(fix_id)
        if self.policy.cooperation is Cooperation.COOPERATIVE:
            accept = fix is not None and fix.kind is FixKind.ROOT_CAUSE_FIX
        else:
            accept = fix is not None
        if not accept:
            return REJECT_TEXT, Origin.TYPED
        candidate = self._pick(response, FollowupKind.NEW_TOPIC, contains="apply")
        if candidate is not None and self._click():
            return candidate.text, Origin.FOLLOWUP_CLICK
        return "Apply that fix; it addresses the actual cause.", Origin.TYPED


def audit_record(record: SessionRecord, config: EngineConfig = DEFAULT_CONFIG) -> list[str]:
    """Post-hoc invariant audit of a finished session record.

    Checks: replay reproduces every snapshot hash; collaborative transcripts
    never propose a fix while the phase is before Fixing or an insert is
    open (the eager pattern proposes its fix up front by design, so the rule
    is scoped to collaborative mode); eager sessions contain exactly one
    assistant turn.
    """
    from .orchestrator.engine import apply_user_turn
    from .orchestrator.store import snapshot_hash

    problems: list[str] = []
    accept_re = re.compile(config.accept_fix_pattern, re.IGNORECASE)
    state: ConversationState | None = None
    assistant_turns = 0
    for i, turn in enumerate(record.turns):
        utterance = Utterance.from_dict(turn["utterance"])
        if state is None:
            state = open_session(utterance, config.max_expansion_depth)
        else:
            state, _ = apply_user_turn(state, utterance, accept_re)
        if state.pattern_mode is PatternMode.UNSET and record.pattern_mode:
            state = set_pattern_mode(state, PatternMode(record.pattern_mode))
        response = turn.get("response")
        if response:
            assistant_turns += 1
            if (
                response["act"] == "FixProposal"
                and state.pattern_mode is PatternMode.COLLABORATIVE_IE
                and (state.phase is not DebugPhase.FIXING or state.depth > 1)
            ):
                problems.append(f"turn {i}: premature FixProposal ({state.phase.value}, depth {state.depth})")
            state = apply_utterance(
                state,
                Utterance(
                    speaker=Speaker.ASSISTANT,
                    text=response["body"],
                    act=DialogueAct(response["act"]),
                    turn_index=state.next_turn_index,
                ),
            )
        if snapshot_hash(state) != turn["state_snapshot_hash"]:
            problems.append(f"turn {i}: snapshot hash mismatch on replay")
    if record.pattern_mode == "EagerQA" and state is not None and state.is_done:
        if assistant_turns != 1:
            problems.append(f"eager session has {assistant_turns} assistant turns")
    return problems


def row_from_record(record: SessionRecord, scenario: Scenario, mode: EvalMode) -> EpisodeRow:
    fixed = False
    accepted_kind: FixKind | None = None
    for event in record.events_of(MetricEventKind.FIX_ACCEPTED):
        fixed = True
        fix = scenario.fix_by_id(event.data.get("fix_id"))
        if fix is not None:
            accepted_kind = fix.kind
    localized = any(
        event.data.get("function_name") == scenario.root_cause.function_name
        for event in record.events_of(MetricEventKind.LOCALIZATION_DECLARED)
    )
    # Accepting the root-cause fix entails having found the root cause.
    if fixed and accepted_kind is FixKind.ROOT_CAUSE_FIX:
        localized = True
    prompts = len(record.events_of(MetricEventKind.PROMPT_SENT))
    followups_used = len(record.events_of(MetricEventKind.FOLLOWUP_CLICKED))
    assistant_turns = sum(1 for turn in record.turns if turn.get("response"))
    return EpisodeRow(
        scenario=scenario.id,
        mode=mode.value,
        localized=localized,
        fixed=fixed,
        prompts=prompts,
        followups_used=followups_used,
        assistant_turns=assistant_turns,
    )


def run_episode(
    scenario_id: str,
    mode: EvalMode,
    user_policy: SimulatedUserPolicy | None = None,
    *,
    engine: Orchestrator | None = None,
    seed: int = 0,
    config: EngineConfig = DEFAULT_CONFIG,
    sessions_dir: str | Path | None = None,
) -> tuple[SessionRecord, EpisodeRow]:
    """Drive one complete scripted session to Done (or the turn budget)."""
    policy = user_policy or SimulatedUserPolicy()
    scenario = load_scenario(scenario_id)
    own_engine = engine or Orchestrator(config=config, sessions_dir=sessions_dir)
    session_id = own_engine.create_session(
        scenario_id=scenario_id, mode_override=mode.mode_override, backend="scripted"
    )
    user = SimulatedUser(
        policy, scenario, own_engine.get_adapter(session_id), random.Random(seed)
    )
    prompts = 0
    try:
        result = own_engine.handle_user_message(
            session_id, scenario.scripted_user.get("primary_request", "Why is this failing?")
        )
        prompts += 1
        while not result.state_view["done"] and prompts < policy.max_turns:
            assert result.response is not None
            text, origin = user.reply(result.response)
            result = own_engine.handle_user_message(session_id, text, origin)
            prompts += 1
    except ScriptExhausted:
        pass  # episode failure: counted as neither localized nor fixed
    record = own_engine.get_record(session_id)
    return record, row_from_record(record, scenario, mode)


def run_suite(
    scenario_ids: list[str],
    modes: list[EvalMode],
    *,
    seed: int = 0,
    user_policy: SimulatedUserPolicy | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
    sessions_dir: str | Path | None = None,
) -> list[EpisodeRow]:
    """One row per (scenario, mode), ordered deterministically."""
    rows: list[EpisodeRow] = []
    engine = Orchestrator(config=config, sessions_dir=sessions_dir)
    for scenario_id in sorted(scenario_ids):
        for mode in sorted(modes, key=lambda m: m.value):
            _, row = run_episode(
                scenario_id, mode, user_policy, engine=engine, seed=seed, config=config
            )
            rows.append(row)
    return rows


def rows_to_csv(rows: list[EpisodeRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv_row())
    return buffer.getvalue()


def rows_to_table(rows: list[EpisodeRow]) -> str:
    headers = CSV_COLUMNS
    cells = [headers] + [row.as_csv_row() for row in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(headers))]
    lines = []
    for i, line in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(line)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
