// Expert dialogue panel: transcript bubbles, reply box, finalize control.

import type { SessionView } from "./api.js";

export interface ChatHandlers {
  onReply: (text: string) => void;
  onFinalize: () => void;
  onDraftChange: (text: string) => void;
}

export interface ChatOptions {
  // set when the server refused further input (409); shown instead of the box
  locked?: string;
  busy?: boolean;
  draft?: string;
}

export function renderChat(
  container: HTMLElement,
  view: SessionView,
  handlers: ChatHandlers,
  opts: ChatOptions = {},
): void {
  container.textContent = "";

  const header = document.createElement("div");
  header.className = "chat-header";
  header.textContent = `session ${view.session_id} with ${view.expert_id} (${view.state})`;
  container.appendChild(header);

  const log = document.createElement("div");
  log.className = "chat-log";
  for (const turn of view.turns) {
    const bubble = document.createElement("div");
    bubble.className = `bubble bubble-${turn.speaker}`;
    const who = document.createElement("span");
    who.className = "speaker";
    who.textContent = turn.speaker;
    const text = document.createElement("p");
    text.textContent = turn.text;
    bubble.appendChild(who);
    bubble.appendChild(text);
    if (turn.version_after !== null) {
      const note = document.createElement("span");
      note.className = "version-note";
      note.textContent = `v${turn.version_after}`;
      bubble.appendChild(note);
    }
    log.appendChild(bubble);
  }
  container.appendChild(log);

  // the invariant: a question is offered exactly while the expert owes a reply
  if (view.pending_question !== null && view.state === "awaiting_expert") {
    const pending = document.createElement("div");
    pending.className = "pending-question";
    pending.textContent = view.pending_question;
    container.appendChild(pending);
  }

  const controls = document.createElement("div");
  controls.className = "chat-controls";

  if (opts.locked) {
    const notice = document.createElement("div");
    notice.className = "locked-notice";
    notice.textContent = opts.locked;
    controls.appendChild(notice);
  }

  const box = document.createElement("textarea");
  box.className = "reply-box";
  box.value = opts.draft ?? "";
  box.placeholder = "Reply to the interviewer";
  box.addEventListener("input", () => handlers.onDraftChange(box.value));

  const send = document.createElement("button");
  send.className = "send-button";
  send.textContent = "Send";
  send.addEventListener("click", () => handlers.onReply(box.value));

  const finalize = document.createElement("button");
  finalize.className = "finalize-button";
  finalize.textContent = "Finalize";
  finalize.addEventListener("click", () => handlers.onFinalize());

  const replyable = view.state === "awaiting_expert" && !opts.locked && !opts.busy;
  box.disabled = !replyable;
  send.disabled = !replyable;
  finalize.disabled = Boolean(opts.locked) || Boolean(opts.busy) || view.state === "finalized";

  controls.appendChild(box);
  controls.appendChild(send);
  controls.appendChild(finalize);
  container.appendChild(controls);
}
