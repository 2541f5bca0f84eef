/** Typed client for the dbgchat HTTP API. */

import type {
  MessageResult,
  Origin,
  ScenarioInfo,
  SessionRecordView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

export interface CreateSessionOptions {
  scenarioId?: string;
  modeOverride?: "ForceEager" | "ForceCollaborative";
  backend?: "scripted" | "live";
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    let body: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        body = JSON.parse(text);
      } catch {
        body = text;
      }
    }
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  async listScenarios(): Promise<ScenarioInfo[]> {
    return this.request<ScenarioInfo[]>("/scenarios");
  }

  async createSession(options: CreateSessionOptions = {}): Promise<string> {
    const body = {
      scenario_id: options.scenarioId ?? null,
      mode_override: options.modeOverride ?? null,
      backend: options.backend ?? "scripted",
    };
    const result = await this.request<{ session_id: string }>("/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
    return result.session_id;
  }

  async sendMessage(
    sessionId: string,
    text: string,
    origin: Origin,
  ): Promise<MessageResult> {
    return this.request<MessageResult>(`/sessions/${sessionId}/messages`, {
      method: "POST",
      body: JSON.stringify({ text, origin }),
    });
  }

  async getSession(sessionId: string): Promise<SessionRecordView> {
    return this.request<SessionRecordView>(`/sessions/${sessionId}`);
  }
}
