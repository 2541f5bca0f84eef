// @vitest-environment happy-dom
/** The DOM binder: chips, bubbles, input gating against a fake API. */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ChatStore } from "../src/store.js";
import { mount } from "../src/dom.js";
import type { MessageResult, StateView } from "../src/types.js";

function stateView(done = false): StateView {
  return {
    session_id: "s1",
    scenario_id: "task1_serialization",
    phase: done ? "Done" : "Identification",
    pattern_mode: "CollaborativeIE",
    done,
    depth: done ? 0 : 2,
    open_frames: done
      ? []
      : [
          { kind: "BasePair", opener_act: "PrimaryRequest", opener_turn: 0 },
          { kind: "InsertExpansion", opener_act: "InfoRequest", opener_turn: 1 },
        ],
    turns: [
      {
        speaker: "User",
        text: "Why did I get this SerializationException?",
        act: "PrimaryRequest",
        turn_index: 0,
        origin: "Typed",
      },
      {
        speaker: "Assistant",
        text: "Can you provide the value of serialized?",
        act: "InfoRequest",
        turn_index: 1,
        origin: "Typed",
      },
    ],
    frames: [],
    followups: done
      ? []
      : [
          { text: "serialized is an empty string", kind: "AnswerCandidate" },
          { text: "How to check the value of serialized during execution?", kind: "MetaQuestion" },
        ],
    context: {
      exception: {
        type_name: "SerializationException",
        message: "bad input",
        thrown_at: { path: "lib/x.cs", line: 412 },
        inner: null,
      },
      frames: [
        {
          index: 0,
          function_name: "ReadObject",
          location: { path: "lib/x.cs", line: 412 },
          locals: [{ name: "serialized", rendered_value: "", value_truncated: false }],
        },
      ],
    },
    legal_next_acts: [],
  };
}

function fakeFetch(posts: unknown[]): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    if (init?.method === "POST" && url.includes("/messages")) {
      posts.push(JSON.parse(String(init.body)));
      const result: MessageResult = {
        response: null,
        state_view: stateView(true),
        legal_next_acts: [],
      };
      return new Response(JSON.stringify(result), { status: 200 });
    }
    if (init?.method === "POST") {
      return new Response(JSON.stringify({ session_id: "s1" }), { status: 200 });
    }
    return new Response(
      JSON.stringify({
        session_id: "s1",
        scenario_id: "task1_serialization",
        created_at: "",
        pattern_mode: "CollaborativeIE",
        turns: [],
        metrics_events: [],
        state_view: stateView(false),
      }),
      { status: 200 },
    );
  }) as typeof fetch;
}

describe("dom binder", () => {
  let root: HTMLElement;
  let store: ChatStore;
  let posts: unknown[];

  beforeEach(async () => {
    document.body.innerHTML = "<div id='app'></div>";
    root = document.getElementById("app")!;
    posts = [];
    store = new ChatStore(new ApiClient("http://x", fakeFetch(posts)));
    mount(store, root);
    await store.attach("s1");
  });

  it("renders bubbles per speaker and distinct chips", () => {
    expect(root.querySelectorAll(".bubble-user")).toHaveLength(1);
    expect(root.querySelectorAll(".bubble-assistant")).toHaveLength(1);
    const chips = [...root.querySelectorAll<HTMLButtonElement>(".chip")];
    expect(chips).toHaveLength(2);
    expect(chips[0]!.className).toContain("chip-answercandidate");
    expect(chips[1]!.className).toContain("chip-metaquestion");
    expect(root.querySelector(".phase-badge")!.textContent).toContain("Identification");
    expect(root.querySelector(".depth-indicator")!.textContent).toContain("stack depth 2");
  });

  it("clicking a chip posts a FollowupClick message", async () => {
    const chip = root.querySelector<HTMLButtonElement>(".chip")!;
    chip.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(posts).toHaveLength(1);
    expect(posts[0]).toMatchObject({
      text: "serialized is an empty string",
      origin: "FollowupClick",
    });
    // the session finished: chips cleared, composer disabled
    expect(root.querySelectorAll(".chip")).toHaveLength(0);
    const input = root.querySelector<HTMLInputElement>(".composer-input")!;
    expect(input.disabled).toBe(true);
  });

  it("blocks empty submits client-side", async () => {
    const form = root.querySelector<HTMLFormElement>(".composer")!;
    const input = root.querySelector<HTMLInputElement>(".composer-input")!;
    input.value = "   ";
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(posts).toHaveLength(0);
  });

  it("shows the context pane with exception and locals", () => {
    const pane = root.querySelector(".context")!;
    expect(pane.textContent).toContain("SerializationException");
    expect(pane.textContent).toContain("serialized =");
  });
});
