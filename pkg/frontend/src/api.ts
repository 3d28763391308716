// Typed client for the workbench HTTP API. Every non-2xx response carries a
// {code, message} envelope; ApiFailure exposes it plus the HTTP status.

export interface ErrorEnvelope {
  code: string;
  message: string;
}

export interface NodeDoc {
  id: string;
  level: "intention" | "description" | "example";
  label?: string;
  description?: string;
  example?: { original: string; revised: string };
  rationale: string;
  provenance: { kind: string; note: string };
  children: string[];
}

export interface TaxonomyDoc {
  taxonomy_id: string;
  domain: string;
  task: string;
  version: number;
  parent_version: number | null;
  created_at: string;
  nodes: NodeDoc[];
}

export interface TaxonomyListing {
  taxonomies: { taxonomy_id: string; versions: number[] }[];
}

export interface AddedEntry {
  id: string;
  path: string[];
  parent: string | null;
  position: number;
  node: NodeDoc;
}

export interface DiffDoc {
  taxonomy_id: string;
  old_version: number;
  new_version: number;
  added: AddedEntry[];
  removed: { id: string; path: string[] }[];
  modified: { node_id: string; field: string; before: unknown; after: unknown }[];
}

export interface Turn {
  speaker: "interviewer" | "expert" | "creator";
  text: string;
  timestamp: string;
  version_after: number | null;
}

export interface SessionView {
  session_id: string;
  expert_id: string;
  taxonomy_id: string;
  turns: Turn[];
  state: "awaiting_expert" | "awaiting_creator" | "complete" | "finalized";
  current_version: number;
  pending_question: string | null;
}

export interface ReplyOutcome {
  no_change: boolean;
  change_rationale: string;
  version_after: number | null;
  state: SessionView["state"];
  pending_question: string | null;
}

export interface JobView {
  job_id: string;
  status: "running" | "done" | "failed";
  result: { taxonomy_id: string; version: number; intentions: number } | null;
  error: ErrorEnvelope | null;
}

export class ApiFailure extends Error {
  constructor(public envelope: ErrorEnvelope, public status: number) {
    super(envelope.message);
    this.name = "ApiFailure";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class WorkbenchApi {
  constructor(private base = "", private doFetch: FetchLike = (u, i) => fetch(u, i)) {}

  private async go<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.doFetch(this.base + path, init);
    } catch (err) {
      throw new ApiFailure({ code: "network_error", message: String(err) }, 0);
    }
    let body: unknown = null;
    try {
      body = await resp.json();
    } catch {
      body = null;
    }
    if (!resp.ok) {
      const envelope = (body ?? { code: "http_error", message: `HTTP ${resp.status}` }) as ErrorEnvelope;
      throw new ApiFailure(envelope, resp.status);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.go(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listTaxonomies(): Promise<TaxonomyListing> {
    return this.go("/api/taxonomies");
  }

  getVersion(id: string, version: number): Promise<TaxonomyDoc> {
    return this.go(`/api/taxonomies/${id}/versions/${version}`);
  }

  getDiff(id: string, from: number, to: number): Promise<DiffDoc> {
    return this.go(`/api/taxonomies/${id}/diff?from=${from}&to=${to}`);
  }

  generate(domain: string, task: string): Promise<{ job_id: string }> {
    return this.post("/api/taxonomies/generate", { domain, task });
  }

  job(id: string): Promise<JobView> {
    return this.go(`/api/jobs/${id}`);
  }

  createSession(taxonomyId: string, expertId: string): Promise<SessionView> {
    return this.post("/api/sessions", { taxonomy_id: taxonomyId, expert_id: expertId });
  }

  getSession(id: string): Promise<SessionView> {
    return this.go(`/api/sessions/${id}`);
  }

  reply(sessionId: string, text: string): Promise<ReplyOutcome> {
    return this.post(`/api/sessions/${sessionId}/reply`, { text });
  }

  finalize(sessionId: string): Promise<{ state: string; taxonomy_id: string; version: number }> {
    return this.post(`/api/sessions/${sessionId}/finalize`, {});
  }
}
