/**
 * Entry point. Query parameters:
 *   ?api=http://127.0.0.1:8000       service base URL (default: same origin)
 *   ?scenario=task1_serialization    create a session for this scenario
 *   ?session=<id>                    attach to an existing session instead
 *   ?eager=1                         force the single-turn responder
 */

import { ApiClient } from "./api.js";
import { ChatStore } from "./store.js";
import { mount } from "./dom.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? window.location.origin;
  const store = new ChatStore(new ApiClient(base));
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  mount(store, root);

  const existing = params.get("session");
  if (existing) {
    await store.attach(existing);
    return;
  }
  await store.createSession({
    scenarioId: params.get("scenario") ?? "task1_serialization",
    modeOverride: params.get("eager") ? "ForceEager" : undefined,
  });
}

void boot();
