/**
 * Integration against a running orchestrator (scripted backend): a scripted
 * browser session on task1 clicks the likely-answer chip, reaches the fix
 * proposal, the server records the click event, and a refresh reproduces
 * the identical transcript view.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatStore } from "../src/store.js";
import { renderSession, IDLE_FLAGS } from "../src/render.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${BASE}/scenarios`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("orchestrator did not come up");
}

beforeAll(async () => {
  const sessions = mkdtempSync(join(tmpdir(), "dbgchat-ui-"));
  const code = [
    "from dbgchat.orchestrator import Orchestrator",
    "from dbgchat.orchestrator.api import create_app",
    "import uvicorn",
    `engine = Orchestrator(sessions_dir=${JSON.stringify(sessions)})`,
    `uvicorn.run(create_app(engine), host='127.0.0.1', port=${PORT}, log_level='error')`,
  ].join("\n");
  server = spawn("python3", ["-c", code], { stdio: "ignore" });
  await waitForServer();
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("chat panel against the live service", () => {
  it("lists the bundled scenarios", async () => {
    const api = new ApiClient(BASE);
    const scenarios = await api.listScenarios();
    expect(scenarios.map((s) => s.id).sort()).toEqual([
      "task1_serialization",
      "task2_overflow",
      "warmup_index_oob",
    ]);
  });

  it("clicks the likely-answer chip and reaches a fix proposal", async () => {
    const api = new ApiClient(BASE);
    const store = new ChatStore(api);
    await store.createSession({ scenarioId: "task1_serialization" });
    await store.send("Why did I get this SerializationException?");

    let view = store.snapshot();
    expect(view.followupChips).toHaveLength(2);
    expect(view.stackDepthIndicator.depth).toBe(2);
    const answerChip = view.followupChips.find((c) => c.kind === "AnswerCandidate");
    expect(answerChip?.text).toBe("serialized is an empty string");

    await store.clickFollowup(answerChip!.text);
    view = store.snapshot();
    expect(view.phaseBadge).toBe("Localization");

    // keep taking the first suggestion until the conversation completes
    let sawFixProposal = false;
    for (let i = 0; i < 8 && !view.done; i++) {
      const chip = view.followupChips[0];
      expect(chip).toBeDefined();
      await store.clickFollowup(chip!.text);
      view = store.snapshot();
      sawFixProposal ||= view.transcript.some((t) => t.act === "FixProposal");
    }
    expect(sawFixProposal).toBe(true);
    expect(view.done).toBe(true);
    expect(view.followupChips).toEqual([]);

    // the server recorded the chip clicks as metric events
    const record = await api.getSession(view.sessionId!);
    const clicks = record.metrics_events.filter((e) => e.kind === "FollowupClicked");
    expect(clicks.length).toBeGreaterThanOrEqual(1);
    expect(clicks[0]!.data["text"]).toBe("serialized is an empty string");
    const fixAccepted = record.metrics_events.some((e) => e.kind === "FixAccepted");
    expect(fixAccepted).toBe(true);
  }, 30_000);

  it("reproduces the identical transcript view on refresh", async () => {
    const api = new ApiClient(BASE);
    const store = new ChatStore(api);
    await store.createSession({ scenarioId: "task1_serialization" });
    await store.send("Why did I get this SerializationException?");
    await store.clickFollowup("serialized is an empty string");
    const before = store.snapshot();

    await store.refresh();
    const after = store.snapshot();
    expect(after).toEqual(before);

    // a brand-new client attaching to the same session sees the same view
    const other = new ChatStore(new ApiClient(BASE));
    await other.attach(before.sessionId!);
    expect(other.snapshot()).toEqual(before);

    // and the rendering itself is reproducible from the fetched state
    const record = await api.getSession(before.sessionId!);
    expect(renderSession(record.state_view, IDLE_FLAGS)).toEqual(before);
  }, 30_000);

  it("shows a 404 as an error banner over an empty transcript", async () => {
    const store = new ChatStore(new ApiClient(BASE));
    await store.attach("does-not-exist");
    const view = store.snapshot();
    expect(view.errorBanner).toContain("unknown session");
    expect(view.transcript).toEqual([]);
  });
});
