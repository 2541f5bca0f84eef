/** Thin DOM binder: renders a UiSessionView and forwards user intent. */

import type { ChatStore } from "./store.js";
import type { UiSessionView, RenderedTurn, FollowupChip } from "./render.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBubble(turn: RenderedTurn): HTMLElement {
  const bubble = el("div", `bubble ${turn.styleClass}`);
  const meta = el(
    "div",
    "bubble-meta",
    `${turn.speaker} · ${turn.act}${turn.viaFollowup ? " · via follow-up" : ""}`,
  );
  const body = el("div", "bubble-text", turn.text);
  bubble.append(meta, body);
  return bubble;
}

function renderChip(chip: FollowupChip, store: ChatStore): HTMLElement {
  const button = el("button", `chip chip-${chip.kind.toLowerCase()}`, chip.text);
  button.disabled = chip.disabled;
  button.addEventListener("click", () => void store.clickFollowup(chip.text));
  return button;
}

function renderContext(view: UiSessionView): HTMLElement {
  const pane = el("div", "context-pane");
  if (!view.contextPane) {
    pane.append(el("div", "context-empty", "no debugger context"));
    return pane;
  }
  const { exception, frames } = view.contextPane;
  pane.append(el("div", "context-exception", `${exception.type_name}: ${exception.message}`));
  let inner = exception.inner;
  while (inner) {
    pane.append(el("div", "context-inner", `caused by ${inner.type_name}: ${inner.message}`));
    inner = inner.inner;
  }
  for (const frame of frames) {
    const line = el(
      "div",
      "context-frame",
      `#${frame.index} ${frame.function_name} (${frame.location.path}:${frame.location.line})`,
    );
    pane.append(line);
    for (const local of frame.locals) {
      pane.append(el("div", "context-local", `${local.name} = ${local.rendered_value}`));
    }
  }
  return pane;
}

export function mount(store: ChatStore, root: HTMLElement): void {
  root.innerHTML = `
    <div class="panel">
      <div class="statusbar">
        <span class="phase-badge"></span>
        <span class="depth-indicator"></span>
      </div>
      <div class="error-banner" hidden></div>
      <div class="transcript"></div>
      <div class="chips"></div>
      <form class="composer">
        <input type="text" class="composer-input" placeholder="Type a message…" />
        <button type="submit" class="composer-send">Send</button>
        <button type="button" class="composer-retry" hidden>Retry</button>
      </form>
      <aside class="context"></aside>
    </div>`;

  const transcript = root.querySelector(".transcript") as HTMLElement;
  const chips = root.querySelector(".chips") as HTMLElement;
  const phaseBadge = root.querySelector(".phase-badge") as HTMLElement;
  const depth = root.querySelector(".depth-indicator") as HTMLElement;
  const banner = root.querySelector(".error-banner") as HTMLElement;
  const form = root.querySelector(".composer") as HTMLFormElement;
  const input = root.querySelector(".composer-input") as HTMLInputElement;
  const send = root.querySelector(".composer-send") as HTMLButtonElement;
  const retry = root.querySelector(".composer-retry") as HTMLButtonElement;
  const context = root.querySelector(".context") as HTMLElement;

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    if (!text.trim()) return; // empty submits are blocked client-side
    void store.send(text).then((sent) => {
      if (sent) input.value = "";
    });
  });
  retry.addEventListener("click", () => void store.retry());

  store.subscribe((view) => {
    phaseBadge.textContent = `phase: ${view.phaseBadge}`;
    depth.textContent = `stack depth ${view.stackDepthIndicator.depth}` +
      (view.stackDepthIndicator.frameLabels.length
        ? ` — ${view.stackDepthIndicator.frameLabels.join(" › ")}`
        : "");
    banner.hidden = view.errorBanner === null;
    banner.textContent = view.errorBanner ?? "";
    retry.hidden = !view.canRetry;

    transcript.replaceChildren(...view.transcript.map(renderBubble));
    transcript.scrollTop = transcript.scrollHeight;
    chips.replaceChildren(...view.followupChips.map((chip) => renderChip(chip, store)));
    input.disabled = !view.inputEnabled;
    send.disabled = !view.inputEnabled;
    context.replaceChildren(renderContext(view));
  });
}
