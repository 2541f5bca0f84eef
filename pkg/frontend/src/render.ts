/**
 * Pure view rendering: (server state_view, UI flags) -> UiSessionView.
 *
 * Everything the panel shows is derived here with no side effects, so a
 * refresh that re-fetches the same server state reproduces the identical
 * view, and the DOM layer stays a dumb binder.
 */

import type { ContextPane, Followup, StateView, TurnView } from "./types.js";

export interface RenderedTurn {
  speaker: "User" | "Assistant";
  styleClass: "bubble-user" | "bubble-assistant" | "bubble-pending";
  text: string;
  act: string;
  turnIndex: number;
  viaFollowup: boolean;
  pending: boolean;
}

export interface FollowupChip {
  text: string;
  kind: Followup["kind"];
  disabled: boolean;
}

export interface StackIndicator {
  depth: number;
  frameLabels: string[];
}

export interface UiSessionView {
  sessionId: string | null;
  scenarioId: string | null;
  transcript: RenderedTurn[];
  followupChips: FollowupChip[];
  stackDepthIndicator: StackIndicator;
  phaseBadge: string;
  contextPane: ContextPane | null;
  errorBanner: string | null;
  canRetry: boolean;
  inputEnabled: boolean;
  done: boolean;
}

export interface UiFlags {
  inFlight: boolean;
  error: string | null;
  canRetry: boolean;
  /** Text the user just sent, shown optimistically until the server confirms. */
  optimisticText: string | null;
}

export const IDLE_FLAGS: UiFlags = {
  inFlight: false,
  error: null,
  canRetry: false,
  optimisticText: null,
};

function renderTurn(turn: TurnView): RenderedTurn {
  return {
    speaker: turn.speaker,
    styleClass: turn.speaker === "User" ? "bubble-user" : "bubble-assistant",
    text: turn.text,
    act: turn.act,
    turnIndex: turn.turn_index,
    viaFollowup: turn.origin === "FollowupClick",
    pending: false,
  };
}

function frameLabel(kind: string, act: string): string {
  return kind === "BasePair" ? "primary request" : `insert: ${act}`;
}

export function renderSession(
  view: StateView | null,
  flags: UiFlags = IDLE_FLAGS,
): UiSessionView {
  const transcript = (view?.turns ?? []).map(renderTurn);
  if (flags.optimisticText !== null) {
    transcript.push({
      speaker: "User",
      styleClass: "bubble-pending",
      text: flags.optimisticText,
      act: "…",
      turnIndex: transcript.length,
      viaFollowup: false,
      pending: true,
    });
  }
  const done = view?.done ?? false;
  // Chips belong to the latest assistant turn only, and every chip is
  // disabled while a message is in flight.
  const chips: FollowupChip[] =
    done || view === null
      ? []
      : view.followups.map((f) => ({
          text: f.text,
          kind: f.kind,
          disabled: flags.inFlight,
        }));
  return {
    sessionId: view?.session_id ?? null,
    scenarioId: view?.scenario_id ?? null,
    transcript,
    followupChips: chips,
    stackDepthIndicator: {
      depth: view?.depth ?? 0,
      frameLabels: (view?.open_frames ?? []).map((f) =>
        frameLabel(f.kind, f.opener_act),
      ),
    },
    phaseBadge: view?.phase ?? "—",
    contextPane: view?.context ?? null,
    errorBanner: flags.error,
    canRetry: flags.canRetry,
    inputEnabled: !flags.inFlight && !done && view !== null,
    done,
  };
}
