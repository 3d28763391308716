// Collapsible three-level taxonomy tree with optional diff badges.

import type { DiffDoc, NodeDoc, TaxonomyDoc } from "./api.js";
import type { ViewState } from "./state.js";

export type Badge = "added" | "removed" | "modified";

export interface TreeHandlers {
  onToggle: (nodeId: string) => void;
}

export function badgesFromDiff(diff: DiffDoc): Map<string, Badge> {
  const badges = new Map<string, Badge>();
  for (const entry of diff.added) badges.set(entry.id, "added");
  for (const entry of diff.removed) badges.set(entry.id, "removed");
  for (const entry of diff.modified) {
    // an added node's fields are not also "modified"
    if (!badges.has(entry.node_id)) badges.set(entry.node_id, "modified");
  }
  return badges;
}

function nodeTitle(node: NodeDoc): string {
  if (node.level === "intention") return node.label ?? "";
  if (node.level === "description") return node.description ?? "";
  const pair = node.example;
  return pair ? `"${pair.original}" -> "${pair.revised}"` : "";
}

function renderNode(
  node: NodeDoc,
  byId: Map<string, NodeDoc>,
  state: ViewState,
  badges: Map<string, Badge>,
  handlers: TreeHandlers,
): HTMLElement {
  const li = document.createElement("li");
  li.className = `node level-${node.level}`;
  li.dataset.nodeId = node.id;

  const row = document.createElement("div");
  row.className = "node-row";
  row.tabIndex = 0;

  const hasChildren = node.children.length > 0;
  const isOpen = state.expanded.has(node.id);
  if (hasChildren) {
    const toggle = document.createElement("button");
    toggle.className = "toggle";
    toggle.textContent = isOpen ? "▾" : "▸";
    toggle.setAttribute("aria-label", isOpen ? "collapse" : "expand");
    toggle.addEventListener("click", () => handlers.onToggle(node.id));
    row.appendChild(toggle);
  } else {
    const spacer = document.createElement("span");
    spacer.className = "toggle-spacer";
    row.appendChild(spacer);
  }

  const title = document.createElement("span");
  title.className = "node-title";
  title.textContent = nodeTitle(node);
  row.appendChild(title);

  const badge = badges.get(node.id);
  if (badge) {
    const mark = document.createElement("span");
    mark.className = `badge badge-${badge}`;
    mark.textContent = badge;
    row.appendChild(mark);
  }

  const rationale = document.createElement("div");
  rationale.className = "rationale";
  rationale.hidden = true;
  rationale.textContent = node.rationale;

  row.addEventListener("focus", () => {
    rationale.hidden = false;
  });
  row.addEventListener("blur", () => {
    rationale.hidden = true;
  });

  li.appendChild(row);
  li.appendChild(rationale);

  if (hasChildren && isOpen) {
    const ul = document.createElement("ul");
    ul.className = "children";
    for (const childId of node.children) {
      const child = byId.get(childId);
      if (child) ul.appendChild(renderNode(child, byId, state, badges, handlers));
    }
    li.appendChild(ul);
  }
  return li;
}

export function renderTree(
  container: HTMLElement,
  doc: TaxonomyDoc,
  state: ViewState,
  badges: Map<string, Badge>,
  handlers: TreeHandlers,
): void {
  container.textContent = "";

  const header = document.createElement("div");
  header.className = "tree-header";
  header.textContent = `${doc.taxonomy_id} v${doc.version} (${doc.domain} / ${doc.task})`;
  container.appendChild(header);

  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const roots = doc.nodes.filter((n) => n.level === "intention");
  const ul = document.createElement("ul");
  ul.className = "tree-roots";
  for (const root of roots) {
    ul.appendChild(renderNode(root, byId, state, badges, handlers));
  }
  container.appendChild(ul);

  // nodes present only in the older version have no row above; list them so
  // a "removed" badge is still visible somewhere
  const ghostIds = [...badges.entries()].filter(([id, b]) => b === "removed" && !byId.has(id));
  if (ghostIds.length > 0) {
    const ghosts = document.createElement("ul");
    ghosts.className = "tree-ghosts";
    for (const [id] of ghostIds) {
      const li = document.createElement("li");
      li.className = "node ghost";
      li.dataset.nodeId = id;
      const mark = document.createElement("span");
      mark.className = "badge badge-removed";
      mark.textContent = "removed";
      li.appendChild(mark);
      li.appendChild(document.createTextNode(` ${id}`));
      ghosts.appendChild(li);
    }
    container.appendChild(ghosts);
  }
}
