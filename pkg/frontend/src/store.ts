/**
 * Session store: owns the server state_view plus transient UI flags and
 * enforces the single-in-flight rule — while a POST is pending, further
 * sends are rejected client-side so the server observes exactly one.
 *
 * Sending shows the user's bubble optimistically; the server-confirmed turn
 * replaces it when the response arrives. A network failure keeps the last
 * message for a retry affordance without losing the transcript.
 */

import { ApiClient, ApiError, type CreateSessionOptions } from "./api.js";
import { renderSession, type UiSessionView } from "./render.js";
import type { Origin, StateView } from "./types.js";

export type Listener = (view: UiSessionView) => void;

export class ChatStore {
  private view: StateView | null = null;
  private sessionId: string | null = null;
  private inFlight = false;
  private error: string | null = null;
  private failed: { text: string; origin: Origin } | null = null;
  private optimisticText: string | null = null;
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.snapshot());
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    const snapshot = this.snapshot();
    for (const listener of this.listeners) listener(snapshot);
  }

  snapshot(): UiSessionView {
    return renderSession(this.view, {
      inFlight: this.inFlight,
      error: this.error,
      canRetry: this.failed !== null,
      optimisticText: this.optimisticText,
    });
  }

  get isInFlight(): boolean {
    return this.inFlight;
  }

  async createSession(options: CreateSessionOptions = {}): Promise<void> {
    try {
      this.sessionId = await this.api.createSession(options);
      this.view = null;
      this.error = null;
    } catch (err) {
      this.error = describe(err);
    }
    this.notify();
  }

  /** Attach to an existing session and load its current view. */
  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
  }

  /**
   * Send a typed message or a follow-up chip click.
   * Returns false when blocked (another send is in flight, or no session).
   */
  async send(text: string, origin: Origin = "Typed"): Promise<boolean> {
    const trimmed = text.trim();
    if (!trimmed || this.inFlight || this.sessionId === null) {
      return false;
    }
    this.inFlight = true;
    this.error = null;
    this.failed = null;
    this.optimisticText = trimmed;
    this.notify();
    try {
      const result = await this.api.sendMessage(this.sessionId, trimmed, origin);
      this.view = result.state_view;
      this.optimisticText = null;
    } catch (err) {
      // Keep the transcript; surface the error inline and offer a retry for
      // transport failures (an API rejection is not retryable as-is).
      this.optimisticText = null;
      this.error = describe(err);
      if (!(err instanceof ApiError)) {
        this.failed = { text: trimmed, origin };
      }
    } finally {
      this.inFlight = false;
      this.notify();
    }
    return true;
  }

  async clickFollowup(text: string): Promise<boolean> {
    const offered = this.view?.followups.some((f) => f.text === text) ?? false;
    if (!offered) return false;
    return this.send(text, "FollowupClick");
  }

  async retry(): Promise<boolean> {
    if (this.failed === null) return false;
    const { text, origin } = this.failed;
    this.failed = null;
    return this.send(text, origin);
  }

  /** Re-fetch the server state; the rendered view must be reproducible. */
  async refresh(): Promise<void> {
    if (this.sessionId === null) return;
    try {
      const record = await this.api.getSession(this.sessionId);
      this.view = record.state_view;
      this.error = null;
    } catch (err) {
      this.error = describe(err);
    }
    this.notify();
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return typeof err.detail === "string" ? err.detail : JSON.stringify(err.detail);
  }
  return err instanceof Error ? err.message : String(err);
}
