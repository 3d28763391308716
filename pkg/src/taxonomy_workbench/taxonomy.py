"""Versioned three-level taxonomy model and structural validation.

A taxonomy is a forest of intention nodes; each intention holds description
nodes, each description holds example nodes (an original/revised sentence
pair). Values are immutable after construction: every mutation path builds a
new version with ``parent_version`` set, so version chains stay auditable.
"""

from __future__ import annotations

import enum
import itertools
import re
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone

from .errors import SchemaError


class Level(enum.Enum):
    INTENTION = "intention"
    DESCRIPTION = "description"
    EXAMPLE = "example"


#: child level required under each level; examples are leaves.
CHILD_LEVEL = {
    Level.INTENTION: Level.DESCRIPTION,
    Level.DESCRIPTION: Level.EXAMPLE,
    Level.EXAMPLE: None,
}


class ProvenanceKind(enum.Enum):
    GENERATED = "generated"
    EXPERT_REVISION = "expert_revision"
    MERGE = "merge"


@dataclass(frozen=True)
class Provenance:
    kind: ProvenanceKind
    note: str = ""


@dataclass(frozen=True)
class ExamplePair:
    original: str
    revised: str


@dataclass(frozen=True)
class TaxonomyNode:
    id: str
    level: Level
    rationale: str
    provenance: Provenance
    label: str | None = None          # intention nodes only
    description: str | None = None    # description nodes only
    example: ExamplePair | None = None  # example nodes only
    children: tuple[str, ...] = ()

    def payload_text(self) -> str:
        """Human-readable text of the node's level-specific payload."""
        if self.level is Level.INTENTION:
            return self.label or ""
        if self.level is Level.DESCRIPTION:
            return self.description or ""
        ex = self.example
        return f"{ex.original} -> {ex.revised}" if ex else ""


@dataclass(frozen=True)
class Taxonomy:
    taxonomy_id: str
    domain: str
    task: str
    version: int
    roots: tuple[str, ...]
    nodes: dict[str, TaxonomyNode]
    created_at: str
    parent_version: int | None = None

    def node(self, node_id: str) -> TaxonomyNode:
        return self.nodes[node_id]

    def root_nodes(self) -> list[TaxonomyNode]:
        return [self.nodes[r] for r in self.roots if r in self.nodes]

    def children_of(self, node_id: str) -> list[TaxonomyNode]:
        return [self.nodes[c] for c in self.nodes[node_id].children if c in self.nodes]

    def intention_labels(self) -> list[str]:
        return [n.label or "" for n in self.root_nodes()]

    def iter_depth_first(self):
        """Yield nodes in depth-first preorder, roots in listed order.

        Dangling references are skipped; shared nodes are yielded once.
        """
        seen: set[str] = set()
        stack: list[str] = list(reversed(self.roots))
        while stack:
            node_id = stack.pop()
            if node_id in seen or node_id not in self.nodes:
                continue
            seen.add(node_id)
            node = self.nodes[node_id]
            yield node
            stack.extend(reversed(node.children))


# ---------------------------------------------------------------------------
# Label normalization
# ---------------------------------------------------------------------------

_WS_RUN = re.compile(r"\s+")
_TERMINAL_PUNCT = ".,;:!?"


def normalize_label(raw: str) -> str:
    """Canonical form used for uniqueness checks: case-folded, whitespace
    collapsed, terminal punctuation stripped. Idempotent."""
    text = _WS_RUN.sub(" ", raw.strip()).casefold()
    return text.rstrip(_TERMINAL_PUNCT).rstrip()


# ---------------------------------------------------------------------------
# Structural validation
# ---------------------------------------------------------------------------


class ValidationCode(enum.Enum):
    DUPLICATE_LABEL = "duplicate_label"
    EMPTY_RATIONALE = "empty_rationale"
    BAD_CHILD_LEVEL = "bad_child_level"
    DANGLING_CHILD = "dangling_child"
    IDENTICAL_EXAMPLE_PAIR = "identical_example_pair"
    # The three below extend the core codes so the report can state every
    # structural invariant violation (forest shape, level/payload match).
    MULTI_PARENT = "multi_parent"
    ORPHAN_NODE = "orphan_node"
    BAD_PAYLOAD = "bad_payload"


@dataclass(frozen=True)
class Violation:
    code: ValidationCode
    node_id: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"{v.code.value}@{v.node_id}: {v.message}" for v in self.violations)


def _check_payload(node: TaxonomyNode, out: list[Violation]) -> None:
    expected = {
        Level.INTENTION: ("label", node.label, node.description is None and node.example is None),
        Level.DESCRIPTION: ("description", node.description, node.label is None and node.example is None),
        Level.EXAMPLE: ("example", node.example, node.label is None and node.description is None),
    }[node.level]
    field_name, value, others_empty = expected
    if not others_empty:
        out.append(Violation(ValidationCode.BAD_PAYLOAD, node.id,
                             f"{node.level.value} node carries payload for another level"))
    if node.level is Level.EXAMPLE:
        ex = node.example
        if ex is None or not ex.original.strip() or not ex.revised.strip():
            out.append(Violation(ValidationCode.BAD_PAYLOAD, node.id, "example pair missing or empty"))
        elif ex.original == ex.revised:
            out.append(Violation(ValidationCode.IDENTICAL_EXAMPLE_PAIR, node.id,
                                 "example original equals revised"))
    elif value is None or not value.strip():
        out.append(Violation(ValidationCode.BAD_PAYLOAD, node.id, f"empty {field_name}"))


def validate_structure(tax: Taxonomy) -> ValidationReport:
    """Report every structural invariant violation; never raises.

    The report is empty exactly when the taxonomy satisfies all type
    invariants. Ordering is deterministic by (node id, code).
    """
    out: list[Violation] = []
    references: dict[str, int] = {}

    for root_id in tax.roots:
        references[root_id] = references.get(root_id, 0) + 1
        if root_id not in tax.nodes:
            out.append(Violation(ValidationCode.DANGLING_CHILD, root_id,
                                 "root id not in nodes table"))
        elif tax.nodes[root_id].level is not Level.INTENTION:
            out.append(Violation(ValidationCode.BAD_CHILD_LEVEL, root_id,
                                 f"root must be an intention, got {tax.nodes[root_id].level.value}"))

    for node in tax.nodes.values():
        if not node.id.strip():
            out.append(Violation(ValidationCode.BAD_PAYLOAD, node.id, "empty node id"))
        _check_payload(node, out)
        if not node.rationale.strip():
            out.append(Violation(ValidationCode.EMPTY_RATIONALE, node.id, "rationale is empty"))
        want = CHILD_LEVEL[node.level]
        for child_id in node.children:
            references[child_id] = references.get(child_id, 0) + 1
            child = tax.nodes.get(child_id)
            if child is None:
                out.append(Violation(ValidationCode.DANGLING_CHILD, child_id,
                                     f"child of {node.id} not in nodes table"))
            elif want is None or child.level is not want:
                got = child.level.value
                out.append(Violation(ValidationCode.BAD_CHILD_LEVEL, child_id,
                                     f"{node.level.value} node {node.id} cannot hold a {got} child"))

    for node_id, count in references.items():
        if count > 1:
            out.append(Violation(ValidationCode.MULTI_PARENT, node_id,
                                 f"referenced {count} times; forest requires exactly one parent"))

    reachable = {n.id for n in tax.iter_depth_first()}
    for node_id in tax.nodes:
        if node_id not in reachable:
            out.append(Violation(ValidationCode.ORPHAN_NODE, node_id,
                                 "node not reachable from any root"))

    # Mutual exclusivity: root labels unique after normalization, and
    # description texts unique within one intention.
    seen_roots: dict[str, str] = {}
    for root in tax.root_nodes():
        if root.level is not Level.INTENTION:
            continue
        key = normalize_label(root.label or "")
        if key in seen_roots:
            out.append(Violation(ValidationCode.DUPLICATE_LABEL, root.id,
                                 f"label duplicates root {seen_roots[key]} after normalization"))
        else:
            seen_roots[key] = root.id
        seen_desc: dict[str, str] = {}
        for child in tax.children_of(root.id):
            if child.level is not Level.DESCRIPTION:
                continue
            dkey = normalize_label(child.description or "")
            if dkey in seen_desc:
                out.append(Violation(ValidationCode.DUPLICATE_LABEL, child.id,
                                     f"description duplicates sibling {seen_desc[dkey]} after normalization"))
            else:
                seen_desc[dkey] = child.id

    out.sort(key=lambda v: (v.node_id, v.code.value))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# Creation helpers
# ---------------------------------------------------------------------------


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_rfc3339(text: str) -> datetime:
    """Validate an RFC 3339 timestamp, returning the parsed datetime."""
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise SchemaError(f"bad RFC 3339 timestamp {text!r}: {exc}") from None


class TickingClock:
    """Deterministic clock for scripted runs: fixed start, +step per call."""

    def __init__(self, start: str = "2024-01-01T00:00:00Z", step_seconds: int = 1):
        self._next = parse_rfc3339(start)
        self._step = step_seconds

    def __call__(self) -> str:
        stamp = self._next.strftime("%Y-%m-%dT%H:%M:%SZ")
        self._next = self._next + timedelta(seconds=self._step)
        return stamp


class IdAllocator:
    """Sequential opaque node ids ("n1", "n2", ...), stable across versions."""

    def __init__(self, prefix: str = "n", start: int = 1):
        self._prefix = prefix
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def next(self) -> str:
        with self._lock:
            return f"{self._prefix}{next(self._counter)}"


def make_intention(node_id: str, label: str, rationale: str,
                   children: tuple[str, ...] = (),
                   provenance: Provenance | None = None) -> TaxonomyNode:
    return TaxonomyNode(id=node_id, level=Level.INTENTION, label=label, rationale=rationale,
                        children=children,
                        provenance=provenance or Provenance(ProvenanceKind.GENERATED))


def make_description(node_id: str, description: str, rationale: str,
                     children: tuple[str, ...] = (),
                     provenance: Provenance | None = None) -> TaxonomyNode:
    return TaxonomyNode(id=node_id, level=Level.DESCRIPTION, description=description,
                        rationale=rationale, children=children,
                        provenance=provenance or Provenance(ProvenanceKind.GENERATED))


def make_example(node_id: str, original: str, revised: str, rationale: str,
                 provenance: Provenance | None = None) -> TaxonomyNode:
    return TaxonomyNode(id=node_id, level=Level.EXAMPLE,
                        example=ExamplePair(original=original, revised=revised),
                        rationale=rationale,
                        provenance=provenance or Provenance(ProvenanceKind.GENERATED))


def with_version_bump(tax: Taxonomy, nodes: dict[str, TaxonomyNode],
                      roots: tuple[str, ...], created_at: str) -> Taxonomy:
    """New version of ``tax`` with the given node table and roots."""
    return replace(tax, version=tax.version + 1, parent_version=tax.version,
                   nodes=nodes, roots=roots, created_at=created_at)
