// Application shell: owns the view state, talks to the API client, and
// re-renders the sidebar, tree and chat panels. No framework, plain DOM.

import { ApiFailure, WorkbenchApi } from "./api.js";
import type { SessionView, TaxonomyDoc, TaxonomyListing } from "./api.js";
import { decodeHash, encodeHash, initialState } from "./state.js";
import type { ViewState } from "./state.js";
import { badgesFromDiff, renderTree } from "./tree.js";
import type { Badge } from "./tree.js";
import { renderChat } from "./chat.js";

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class App {
  state: ViewState = initialState();
  api!: WorkbenchApi;
  root!: HTMLElement;

  listing: TaxonomyListing | null = null;
  doc: TaxonomyDoc | null = null;
  session: SessionView | null = null;
  badges: Map<string, Badge> = new Map();

  replyInFlight = false;
  sessionLock: string | null = null;
  jobPollMs = 300;

  private timer: ReturnType<typeof setInterval> | null = null;
  private lastSnapshot = "";

  async init(root: HTMLElement, api: WorkbenchApi, opts: { poll?: boolean } = {}): Promise<void> {
    this.root = root;
    this.api = api;
    this.state = decodeHash(window.location.hash);
    this.buildSkeleton();
    await this.refreshAll();
    if (opts.poll !== false) {
      this.timer = setInterval(() => void this.poll(), 1000);
    }
  }

  destroy(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  private buildSkeleton(): void {
    this.root.textContent = "";
    this.root.innerHTML = `
      <div class="banners"></div>
      <div class="layout">
        <aside class="sidebar"></aside>
        <main class="main">
          <section class="tree-panel">
            <div class="version-bar"></div>
            <div class="tree"></div>
          </section>
          <section class="chat-panel"></section>
        </main>
      </div>`;
  }

  private el(selector: string): HTMLElement {
    const found = this.root.querySelector(selector);
    if (!found) throw new Error(`missing element: ${selector}`);
    return found as HTMLElement;
  }

  notify(message: string): void {
    const banners = this.el(".banners");
    const banner = document.createElement("div");
    banner.className = "banner";
    const text = document.createElement("span");
    text.textContent = message;
    const close = document.createElement("button");
    close.textContent = "×";
    close.className = "banner-close";
    close.addEventListener("click", () => banner.remove());
    banner.appendChild(text);
    banner.appendChild(close);
    banners.appendChild(banner);
    while (banners.children.length > 3) banners.firstElementChild?.remove();
  }

  private fail(err: unknown): void {
    if (err instanceof ApiFailure) this.notify(`${err.envelope.code}: ${err.envelope.message}`);
    else this.notify(String(err));
  }

  syncHash(): void {
    window.location.hash = encodeHash(this.state);
  }

  async refreshAll(): Promise<void> {
    await this.refreshListing();
    await this.refreshTaxonomy();
    await this.refreshSession();
    this.render(true);
  }

  async refreshListing(): Promise<void> {
    try {
      this.listing = await this.api.listTaxonomies();
    } catch (err) {
      this.fail(err);
      return;
    }
    const entry = this.state.taxonomyId
      ? this.listing.taxonomies.find((t) => t.taxonomy_id === this.state.taxonomyId)
      : undefined;
    if (entry && this.state.version === null) {
      this.state.version = entry.versions[entry.versions.length - 1];
    }
  }

  async refreshTaxonomy(): Promise<void> {
    if (!this.state.taxonomyId || this.state.version === null) {
      this.doc = null;
      this.badges = new Map();
      return;
    }
    try {
      this.doc = await this.api.getVersion(this.state.taxonomyId, this.state.version);
    } catch (err) {
      this.doc = null;
      this.badges = new Map();
      this.fail(err);
      return;
    }
    await this.refreshBadges();
  }

  async refreshBadges(): Promise<void> {
    this.badges = new Map();
    if (!this.state.overlay || this.state.compareTo === null) return;
    if (!this.state.taxonomyId || this.state.version === null) return;
    if (this.state.compareTo === this.state.version) return;
    try {
      const diff = await this.api.getDiff(this.state.taxonomyId, this.state.compareTo, this.state.version);
      this.badges = badgesFromDiff(diff);
    } catch (err) {
      this.fail(err);
    }
  }

  async refreshSession(): Promise<void> {
    if (!this.state.sessionId) {
      this.session = null;
      this.state.pendingQuestion = null;
      return;
    }
    try {
      this.session = await this.api.getSession(this.state.sessionId);
      this.state.pendingQuestion = this.session.pending_question;
    } catch (err) {
      this.session = null;
      this.state.pendingQuestion = null;
      this.fail(err);
    }
  }

  private async poll(): Promise<void> {
    await this.refreshListing();
    if (this.state.sessionId) await this.refreshSession();
    this.render(false);
  }

  // --- user actions -------------------------------------------------------

  async selectTaxonomy(id: string): Promise<void> {
    this.state.taxonomyId = id;
    this.state.version = null;
    this.state.compareTo = null;
    this.state.overlay = false;
    this.state.expanded = new Set();
    const entry = this.listing?.taxonomies.find((t) => t.taxonomy_id === id);
    if (entry) this.state.version = entry.versions[entry.versions.length - 1];
    this.syncHash();
    await this.refreshTaxonomy();
    this.render(true);
  }

  async selectVersion(version: number): Promise<void> {
    this.state.version = version;
    this.syncHash();
    await this.refreshTaxonomy();
    this.render(true);
  }

  async setOverlay(on: boolean, compareTo: number | null): Promise<void> {
    this.state.overlay = on;
    this.state.compareTo = compareTo;
    this.syncHash();
    await this.refreshBadges();
    this.render(true);
  }

  toggleNode(nodeId: string): void {
    if (this.state.expanded.has(nodeId)) this.state.expanded.delete(nodeId);
    else this.state.expanded.add(nodeId);
    this.syncHash();
    this.render(true);
  }

  async startSession(expertId: string): Promise<void> {
    if (!this.state.taxonomyId) return;
    try {
      this.session = await this.api.createSession(this.state.taxonomyId, expertId);
    } catch (err) {
      this.fail(err);
      return;
    }
    this.state.sessionId = this.session.session_id;
    this.state.pendingQuestion = this.session.pending_question;
    this.sessionLock = null;
    this.syncHash();
    this.render(true);
  }

  async sendReply(text: string): Promise<void> {
    if (!this.state.sessionId || this.replyInFlight || !text.trim()) return;
    this.replyInFlight = true;
    this.render(true);
    try {
      const outcome = await this.api.reply(this.state.sessionId, text);
      this.state.draftReply = "";
      if (outcome.version_after !== null) {
        // a revision landed: jump to it and badge what changed
        this.state.compareTo = this.state.version;
        this.state.version = outcome.version_after;
        this.state.overlay = true;
        this.syncHash();
        await this.refreshTaxonomy();
      }
      await this.refreshSession();
    } catch (err) {
      if (err instanceof ApiFailure && err.status === 409) {
        this.sessionLock = err.envelope.message;
        await this.refreshSession();
      } else {
        this.fail(err);
      }
    } finally {
      this.replyInFlight = false;
      this.render(true);
    }
  }

  async finalizeSession(): Promise<void> {
    if (!this.state.sessionId || this.replyInFlight) return;
    this.replyInFlight = true;
    this.render(true);
    try {
      await this.api.finalize(this.state.sessionId);
      await this.refreshSession();
      await this.refreshListing();
    } catch (err) {
      if (err instanceof ApiFailure && err.status === 409) {
        this.sessionLock = err.envelope.message;
        await this.refreshSession();
      } else {
        this.fail(err);
      }
    } finally {
      this.replyInFlight = false;
      this.render(true);
    }
  }

  async generateTaxonomy(domain: string, task: string): Promise<void> {
    let jobId: string;
    try {
      jobId = (await this.api.generate(domain, task)).job_id;
    } catch (err) {
      this.fail(err);
      return;
    }
    for (;;) {
      let job;
      try {
        job = await this.api.job(jobId);
      } catch (err) {
        this.fail(err);
        return;
      }
      if (job.status === "done" && job.result) {
        this.state.taxonomyId = job.result.taxonomy_id;
        this.state.version = job.result.version;
        this.syncHash();
        await this.refreshListing();
        await this.refreshTaxonomy();
        this.render(true);
        return;
      }
      if (job.status === "failed") {
        const envelope = job.error ?? { code: "job_failed", message: "generation failed" };
        this.notify(`${envelope.code}: ${envelope.message}`);
        return;
      }
      await sleep(this.jobPollMs);
    }
  }

  // --- rendering ----------------------------------------------------------

  render(force: boolean): void {
    const snapshot = JSON.stringify({
      listing: this.listing,
      doc: this.doc,
      session: this.session,
      badges: [...this.badges.entries()],
      state: { ...this.state, expanded: [...this.state.expanded].sort() },
      busy: this.replyInFlight,
      lock: this.sessionLock,
    });
    if (!force && snapshot === this.lastSnapshot) return;
    this.lastSnapshot = snapshot;

    this.renderSidebar();
    this.renderVersionBar();
    this.renderTreePanel();
    this.renderChatPanel();
  }

  private renderSidebar(): void {
    const sidebar = this.el(".sidebar");
    sidebar.textContent = "";

    const heading = document.createElement("h2");
    heading.textContent = "Taxonomies";
    sidebar.appendChild(heading);

    const items = this.listing?.taxonomies ?? [];
    if (items.length === 0) {
      const empty = document.createElement("div");
      empty.className = "empty-state";
      const note = document.createElement("p");
      note.textContent = "No taxonomies yet. Generate one to get started.";
      empty.appendChild(note);
      empty.appendChild(this.generateForm());
      sidebar.appendChild(empty);
      return;
    }

    const list = document.createElement("ul");
    list.className = "taxonomy-list";
    for (const item of items) {
      const li = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#";
      link.textContent = `${item.taxonomy_id} (v${item.versions[item.versions.length - 1]})`;
      if (item.taxonomy_id === this.state.taxonomyId) li.className = "selected";
      link.addEventListener("click", (ev) => {
        ev.preventDefault();
        void this.selectTaxonomy(item.taxonomy_id);
      });
      li.appendChild(link);
      list.appendChild(li);
    }
    sidebar.appendChild(list);
    sidebar.appendChild(this.generateForm());
  }

  private generateForm(): HTMLElement {
    const form = document.createElement("div");
    form.className = "generate-form";
    const domain = document.createElement("input");
    domain.placeholder = "domain";
    domain.className = "generate-domain";
    const task = document.createElement("input");
    task.placeholder = "task";
    task.className = "generate-task";
    const go = document.createElement("button");
    go.className = "generate-button";
    go.textContent = "Generate";
    go.addEventListener("click", () => {
      if (domain.value.trim() && task.value.trim()) {
        void this.generateTaxonomy(domain.value.trim(), task.value.trim());
      }
    });
    form.appendChild(domain);
    form.appendChild(task);
    form.appendChild(go);
    return form;
  }

  private renderVersionBar(): void {
    const bar = this.el(".version-bar");
    bar.textContent = "";
    const entry = this.listing?.taxonomies.find((t) => t.taxonomy_id === this.state.taxonomyId);
    if (!entry) return;

    const version = document.createElement("select");
    version.className = "version-select";
    for (const v of entry.versions) {
      const opt = document.createElement("option");
      opt.value = String(v);
      opt.textContent = `v${v}`;
      if (v === this.state.version) opt.selected = true;
      version.appendChild(opt);
    }
    version.addEventListener("change", () => void this.selectVersion(Number(version.value)));
    bar.appendChild(version);

    const overlay = document.createElement("label");
    overlay.className = "overlay-toggle";
    const check = document.createElement("input");
    check.type = "checkbox";
    check.checked = this.state.overlay;
    const compare = document.createElement("select");
    compare.className = "compare-select";
    for (const v of entry.versions.filter((v) => v !== this.state.version)) {
      const opt = document.createElement("option");
      opt.value = String(v);
      opt.textContent = `vs v${v}`;
      if (v === this.state.compareTo) opt.selected = true;
      compare.appendChild(opt);
    }
    const apply = () => {
      const to = compare.value ? Number(compare.value) : null;
      void this.setOverlay(check.checked, to);
    };
    check.addEventListener("change", apply);
    compare.addEventListener("change", apply);
    overlay.appendChild(check);
    overlay.appendChild(document.createTextNode(" diff overlay "));
    overlay.appendChild(compare);
    bar.appendChild(overlay);

    const expert = document.createElement("input");
    expert.className = "expert-input";
    expert.placeholder = "expert id";
    const start = document.createElement("button");
    start.className = "start-session";
    start.textContent = "Start review session";
    start.addEventListener("click", () => {
      if (expert.value.trim()) void this.startSession(expert.value.trim());
    });
    bar.appendChild(expert);
    bar.appendChild(start);
  }

  private renderTreePanel(): void {
    const tree = this.el(".tree");
    if (!this.doc) {
      tree.textContent = "";
      const hint = document.createElement("p");
      hint.className = "tree-hint";
      hint.textContent = "Select a taxonomy to view it.";
      tree.appendChild(hint);
      return;
    }
    renderTree(tree, this.doc, this.state, this.badges, {
      onToggle: (id) => this.toggleNode(id),
    });
  }

  private renderChatPanel(): void {
    const panel = this.el(".chat-panel");
    if (!this.session) {
      panel.textContent = "";
      return;
    }
    renderChat(
      panel,
      this.session,
      {
        onReply: (text) => void this.sendReply(text),
        onFinalize: () => void this.finalizeSession(),
        onDraftChange: (text) => {
          this.state.draftReply = text;
        },
      },
      {
        locked: this.sessionLock ?? undefined,
        busy: this.replyInFlight,
        draft: this.state.draftReply,
      },
    );
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root) void new App().init(root, new WorkbenchApi());
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
