import { beforeEach, describe, expect, it } from "vitest";

import { renderChat } from "../src/chat.js";
import type { SessionView } from "../src/api.js";
import { CLARITY_QUESTION, CONSISTENCY_QUESTION } from "./backend.js";

const handlers = {
  onReply: () => undefined,
  onFinalize: () => undefined,
  onDraftChange: () => undefined,
};

function freshSession(): SessionView {
  return {
    session_id: "sess-1",
    expert_id: "alice",
    taxonomy_id: "legal-email",
    turns: [
      { speaker: "interviewer", text: CONSISTENCY_QUESTION, timestamp: "t0", version_after: null },
    ],
    state: "awaiting_expert",
    current_version: 1,
    pending_question: CONSISTENCY_QUESTION,
  };
}

function container(): HTMLElement {
  const div = document.createElement("div");
  document.body.appendChild(div);
  return div;
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("renderChat", () => {
  it("puts the first interviewer question in the first bubble, verbatim", () => {
    const el = container();
    renderChat(el, freshSession(), handlers);

    const first = el.querySelector(".chat-log .bubble") as HTMLElement;
    expect(first.className).toContain("bubble-interviewer");
    expect(first.querySelector("p")?.textContent).toBe(CONSISTENCY_QUESTION);
  });

  it("keeps bubbles in server order and marks revision turns with the version", () => {
    const view = freshSession();
    view.turns = [
      ...view.turns,
      { speaker: "expert", text: "Missing counterargument handling.", timestamp: "t1", version_after: null },
      { speaker: "creator", text: "Added a description.", timestamp: "t2", version_after: 2 },
      { speaker: "interviewer", text: CLARITY_QUESTION, timestamp: "t3", version_after: null },
    ];
    const el = container();
    renderChat(el, view, handlers);

    const speakers = [...el.querySelectorAll(".bubble .speaker")].map((s) => s.textContent);
    expect(speakers).toEqual(["interviewer", "expert", "creator", "interviewer"]);
    expect(el.querySelector(".bubble-creator .version-note")?.textContent).toBe("v2");
  });

  it("shows the pending question exactly while a reply is owed", () => {
    const el = container();
    renderChat(el, freshSession(), handlers);
    expect(el.querySelector(".pending-question")?.textContent).toBe(CONSISTENCY_QUESTION);

    const done = freshSession();
    done.state = "complete";
    done.pending_question = null;
    renderChat(el, done, handlers);
    expect(el.querySelector(".pending-question")).toBeNull();

    // defensive: even a stale question must not render once input is closed
    const stale = freshSession();
    stale.state = "finalized";
    renderChat(el, stale, handlers);
    expect(el.querySelector(".pending-question")).toBeNull();
  });

  it("disables input while a reply is in flight", () => {
    const el = container();
    renderChat(el, freshSession(), handlers, { busy: true });

    expect((el.querySelector(".reply-box") as HTMLTextAreaElement).disabled).toBe(true);
    expect((el.querySelector(".send-button") as HTMLButtonElement).disabled).toBe(true);
  });

  it("locks the panel with an explanation after the server refused input", () => {
    const el = container();
    renderChat(el, freshSession(), handlers, { locked: "session sess-1 is finalized" });

    expect(el.querySelector(".locked-notice")?.textContent).toBe("session sess-1 is finalized");
    expect((el.querySelector(".reply-box") as HTMLTextAreaElement).disabled).toBe(true);
    expect((el.querySelector(".send-button") as HTMLButtonElement).disabled).toBe(true);
    expect((el.querySelector(".finalize-button") as HTMLButtonElement).disabled).toBe(true);
  });

  it("locks input once the session is finalized", () => {
    const view = freshSession();
    view.state = "finalized";
    view.pending_question = null;
    const el = container();
    renderChat(el, view, handlers);

    expect((el.querySelector(".reply-box") as HTMLTextAreaElement).disabled).toBe(true);
    expect((el.querySelector(".finalize-button") as HTMLButtonElement).disabled).toBe(true);
  });

  it("keeps the draft text in the reply box", () => {
    const el = container();
    renderChat(el, freshSession(), handlers, { draft: "half-written thought" });
    expect((el.querySelector(".reply-box") as HTMLTextAreaElement).value).toBe("half-written thought");
  });
});
