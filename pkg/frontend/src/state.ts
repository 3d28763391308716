// View state plus its URL-hash persistence. Everything a reload must restore
// lives here; transient fields (pending question, draft text) are refetched or
// user-owned and stay out of the hash.

export interface ViewState {
  taxonomyId: string | null;
  version: number | null;
  compareTo: number | null; // older version for the diff overlay
  overlay: boolean;
  expanded: Set<string>;
  sessionId: string | null;
  pendingQuestion: string | null;
  draftReply: string;
}

export function initialState(): ViewState {
  return {
    taxonomyId: null,
    version: null,
    compareTo: null,
    overlay: false,
    expanded: new Set(),
    sessionId: null,
    pendingQuestion: null,
    draftReply: "",
  };
}

export function encodeHash(state: ViewState): string {
  const parts: string[] = [];
  if (state.taxonomyId) parts.push(`t=${encodeURIComponent(state.taxonomyId)}`);
  if (state.version !== null) parts.push(`v=${state.version}`);
  if (state.compareTo !== null) parts.push(`c=${state.compareTo}`);
  if (state.overlay) parts.push("o=1");
  if (state.sessionId) parts.push(`s=${encodeURIComponent(state.sessionId)}`);
  if (state.expanded.size > 0) {
    const ids = [...state.expanded].sort().map(encodeURIComponent).join(",");
    parts.push(`x=${ids}`);
  }
  return parts.length > 0 ? "#" + parts.join("&") : "";
}

export function decodeHash(hash: string): ViewState {
  const state = initialState();
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return state;
  for (const part of raw.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) continue;
    const key = part.slice(0, eq);
    const value = decodeURIComponent(part.slice(eq + 1));
    if (key === "t" && value) state.taxonomyId = value;
    else if (key === "v" && /^\d+$/.test(value)) state.version = Number(value);
    else if (key === "c" && /^\d+$/.test(value)) state.compareTo = Number(value);
    else if (key === "o") state.overlay = value === "1";
    else if (key === "s" && value) state.sessionId = value;
    else if (key === "x" && value) {
      for (const id of value.split(",")) state.expanded.add(decodeURIComponent(id));
    }
  }
  return state;
}
