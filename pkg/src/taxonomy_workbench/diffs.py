"""Diffing and patching between versions of one taxonomy.

Nodes are matched by id (ids are stable across versions). A node that is
unmodified never appears in the diff. Membership of added nodes travels on
the added entries themselves (parent + position), so a pure insertion shows
up as exactly one added entry; `modified` records field changes on
surviving nodes plus pure reorders of children or roots. Applying a diff to
the older version reproduces the newer one node-for-node.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import MismatchedTaxonomy
from .taxonomy import ExamplePair, Provenance, Taxonomy, TaxonomyNode

#: scope id used for taxonomy-level entries (the roots list).
TAXONOMY_SCOPE = "$taxonomy"

_NODE_FIELDS = ("label", "description", "example", "rationale", "provenance")


@dataclass(frozen=True)
class AddedNode:
    node_id: str
    path: tuple[str, ...]
    node: TaxonomyNode
    parent_id: str | None  # None for a new root
    position: int          # index in the parent's children (or in roots)


@dataclass(frozen=True)
class RemovedNode:
    node_id: str
    path: tuple[str, ...]


@dataclass(frozen=True)
class FieldChange:
    node_id: str
    field: str
    before: object
    after: object


@dataclass(frozen=True)
class TaxonomyDiff:
    taxonomy_id: str
    old_version: int
    new_version: int
    new_parent_version: int | None
    new_created_at: str
    added: tuple[AddedNode, ...] = ()
    removed: tuple[RemovedNode, ...] = ()
    modified: tuple[FieldChange, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.modified)


def _paths(tax: Taxonomy) -> dict[str, tuple[str, ...]]:
    out: dict[str, tuple[str, ...]] = {}
    stack = [(root, (root,)) for root in reversed(tax.roots) if root in tax.nodes]
    while stack:
        node_id, path = stack.pop()
        if node_id in out:
            continue
        out[node_id] = path
        for child in reversed(tax.nodes[node_id].children):
            if child in tax.nodes:
                stack.append((child, path + (child,)))
    return out


def _parents(tax: Taxonomy) -> dict[str, tuple[str | None, int]]:
    out: dict[str, tuple[str | None, int]] = {}
    for index, root in enumerate(tax.roots):
        out[root] = (None, index)
    for node in tax.nodes.values():
        for index, child in enumerate(node.children):
            out.setdefault(child, (node.id, index))
    return out


def diff_versions(older: Taxonomy, newer: Taxonomy) -> TaxonomyDiff:
    if older.taxonomy_id != newer.taxonomy_id:
        raise MismatchedTaxonomy(
            f"cannot diff {older.taxonomy_id!r} against {newer.taxonomy_id!r}")

    old_ids, new_ids = set(older.nodes), set(newer.nodes)
    added_ids = new_ids - old_ids
    removed_ids = old_ids - new_ids
    new_paths = _paths(newer)
    old_paths = _paths(older)
    new_parents = _parents(newer)

    added = tuple(sorted(
        (AddedNode(node_id=i, path=new_paths.get(i, (i,)), node=newer.nodes[i],
                   parent_id=new_parents.get(i, (None, 0))[0],
                   position=new_parents.get(i, (None, 0))[1])
         for i in added_ids),
        key=lambda a: (len(a.path), a.parent_id or "", a.position)))
    removed = tuple(sorted(
        (RemovedNode(node_id=i, path=old_paths.get(i, (i,))) for i in removed_ids),
        key=lambda r: r.node_id))

    modified: list[FieldChange] = []
    for node_id in sorted(old_ids & new_ids):
        before, after = older.nodes[node_id], newer.nodes[node_id]
        for field_name in _NODE_FIELDS:
            if getattr(before, field_name) != getattr(after, field_name):
                modified.append(FieldChange(node_id, field_name,
                                            getattr(before, field_name),
                                            getattr(after, field_name)))
        # A children change counts as a modification only when it is not
        # fully explained by node additions/removals (i.e. a reorder/move).
        old_proj = [c for c in before.children if c not in removed_ids]
        new_proj = [c for c in after.children if c not in added_ids]
        if old_proj != new_proj:
            modified.append(FieldChange(node_id, "children",
                                        before.children, after.children))

    old_roots_proj = [r for r in older.roots if r not in removed_ids]
    new_roots_proj = [r for r in newer.roots if r not in added_ids]
    if old_roots_proj != new_roots_proj:
        modified.append(FieldChange(TAXONOMY_SCOPE, "roots", older.roots, newer.roots))

    return TaxonomyDiff(taxonomy_id=older.taxonomy_id,
                        old_version=older.version, new_version=newer.version,
                        new_parent_version=newer.parent_version,
                        new_created_at=newer.created_at,
                        added=added, removed=removed, modified=tuple(modified))


def apply_diff(older: Taxonomy, diff: TaxonomyDiff) -> Taxonomy:
    """Reconstruct the newer version from the older one plus the diff."""
    if older.taxonomy_id != diff.taxonomy_id:
        raise MismatchedTaxonomy(
            f"diff for {diff.taxonomy_id!r} cannot apply to {older.taxonomy_id!r}")

    removed_ids = {r.node_id for r in diff.removed}
    nodes: dict[str, TaxonomyNode] = {}
    for node_id, node in older.nodes.items():
        if node_id in removed_ids:
            continue
        if any(c in removed_ids for c in node.children):
            node = replace(node, children=tuple(c for c in node.children
                                                if c not in removed_ids))
        nodes[node_id] = node
    roots = tuple(r for r in older.roots if r not in removed_ids)

    for change in diff.modified:
        if change.node_id == TAXONOMY_SCOPE:
            if change.field == "roots":
                roots = tuple(change.after)
            continue
        value = change.after
        if change.field == "children":
            value = tuple(value)
        nodes[change.node_id] = replace(nodes[change.node_id], **{change.field: value})

    for entry in diff.added:
        nodes[entry.node_id] = entry.node

    for entry in sorted(diff.added, key=lambda a: (a.parent_id or "", a.position)):
        if entry.parent_id is None:
            if entry.node_id not in roots:
                position = min(entry.position, len(roots))
                roots = roots[:position] + (entry.node_id,) + roots[position:]
        else:
            parent = nodes[entry.parent_id]
            if entry.node_id not in parent.children:
                position = min(entry.position, len(parent.children))
                children = (parent.children[:position] + (entry.node_id,)
                            + parent.children[position:])
                nodes[entry.parent_id] = replace(parent, children=children)

    return replace(older, version=diff.new_version,
                   parent_version=diff.new_parent_version,
                   created_at=diff.new_created_at, nodes=nodes, roots=roots)


# ---------------------------------------------------------------------------
# JSON export (API / CLI)
# ---------------------------------------------------------------------------


def _value_to_json(value: object) -> object:
    if isinstance(value, ExamplePair):
        return {"original": value.original, "revised": value.revised}
    if isinstance(value, Provenance):
        return {"kind": value.kind.value, "note": value.note}
    if isinstance(value, tuple):
        return list(value)
    return value


def diff_to_dict(diff: TaxonomyDiff) -> dict:
    from .serialization import node_to_dict

    return {
        "taxonomy_id": diff.taxonomy_id,
        "old_version": diff.old_version,
        "new_version": diff.new_version,
        "added": [{"id": a.node_id, "path": list(a.path),
                   "parent": a.parent_id, "position": a.position,
                   "node": node_to_dict(a.node)} for a in diff.added],
        "removed": [{"id": r.node_id, "path": list(r.path)} for r in diff.removed],
        "modified": [{"node_id": m.node_id, "field": m.field,
                      "before": _value_to_json(m.before),
                      "after": _value_to_json(m.after)} for m in diff.modified],
    }
