/**
 * Wire types for the dbgchat HTTP API.
 *
 * These mirror the JSON the service returns; nothing here is invented
 * client-side. `StateView` is the server's rendering of a session after a
 * turn, `SessionRecordView` is the persisted record from GET /sessions/{id}.
 */

export type Speaker = "User" | "Assistant";
export type Origin = "Typed" | "FollowupClick";

export type DialogueAct =
  | "PrimaryRequest"
  | "Answer"
  | "InfoRequest"
  | "InstructionStep"
  | "HypothesisProposal"
  | "FixProposal"
  | "InfoProvision"
  | "MetaQuestion"
  | "Acknowledgement";

export type DebugPhase =
  | "Identification"
  | "Localization"
  | "Comprehension"
  | "Fixing"
  | "Done";

export type FollowupKind = "AnswerCandidate" | "MetaQuestion" | "NewTopic";

export interface Followup {
  text: string;
  kind: FollowupKind;
  anchor_entities?: string[];
}

export interface TurnView {
  speaker: Speaker;
  text: string;
  act: DialogueAct;
  turn_index: number;
  origin: Origin;
}

export interface OpenFrameView {
  kind: "BasePair" | "InsertExpansion";
  opener_act: DialogueAct;
  opener_turn: number;
}

export interface VariableView {
  name: string;
  rendered_value: string;
  value_truncated: boolean;
}

export interface FrameView {
  index: number;
  function_name: string;
  location: { path: string; line: number };
  locals: VariableView[];
}

export interface ContextPane {
  exception: {
    type_name: string;
    message: string;
    thrown_at: { path: string; line: number };
    inner: ContextPane["exception"] | null;
  };
  frames: FrameView[];
}

export interface StateView {
  session_id: string;
  scenario_id: string | null;
  phase: DebugPhase | null;
  pattern_mode: string | null;
  done: boolean;
  depth: number;
  open_frames: OpenFrameView[];
  turns: TurnView[];
  frames: unknown[];
  followups: Followup[];
  context: ContextPane | null;
  legal_next_acts: [string, string][];
}

export interface AssistantResponseView {
  act: DialogueAct;
  body: string;
  payload: Record<string, unknown> | null;
  followups: Followup[];
}

export interface MessageResult {
  response: AssistantResponseView | null;
  state_view: StateView;
  legal_next_acts: [string, string][];
}

export interface MetricEventView {
  kind: string;
  turn_index: number;
  data: Record<string, unknown>;
}

export interface SessionRecordView {
  session_id: string;
  scenario_id: string | null;
  created_at: string;
  pattern_mode: string | null;
  turns: { utterance: TurnView; response: AssistantResponseView | null }[];
  metrics_events: MetricEventView[];
  state_view: StateView;
}

export interface ScenarioInfo {
  id: string;
  title: string;
}
