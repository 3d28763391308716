"""Aggregation of several finalized taxonomies into one.

Pass 1 is deterministic: intentions (and, under each surviving intention,
descriptions) are grouped by normalized text and collapsed; example pairs
are unioned with exact dedup. Everything is emitted in normalized-text sort
order, so the result is invariant under input permutation. Pass 2, only
when a provider is given, lets an LLM propose extra collapses between
near-duplicate labels; each proposal is applied only if the taxonomy still
validates afterwards. Pass 3 re-validates the final tree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .errors import DomainMismatch, InvalidInput
from .gateway import ChatMessage, ChatRequest, Provider, Role
from .serialization import node_to_dict
from .taxonomy import (
    IdAllocator,
    Level,
    Provenance,
    ProvenanceKind,
    Taxonomy,
    TaxonomyNode,
    ValidationReport,
    make_description,
    make_example,
    make_intention,
    normalize_label,
    now_rfc3339,
    validate_structure,
)


class CollapseReason(enum.Enum):
    EXACT_NORMALIZED_MATCH = "exact_normalized_match"
    LLM_PROPOSED_MERGE = "llm_proposed_merge"


@dataclass(frozen=True)
class CollapseRecord:
    survivor_id: str               # node id in the merged output
    absorbed: tuple[str, ...]      # "<taxonomy_id>:<node_id>" source refs
    reason: CollapseReason


@dataclass(frozen=True)
class MergeProposal:
    left: str                      # output node id
    right: str
    merged_text: str
    rationale: str


@dataclass
class MergeReport:
    inputs: list[tuple[str, int]] = field(default_factory=list)
    collapsed: list[CollapseRecord] = field(default_factory=list)
    added_from: dict[str, str] = field(default_factory=dict)
    verification: ValidationReport = field(default_factory=ValidationReport)
    skipped_proposals: list[str] = field(default_factory=list)


def _merge_rationales(members: list[tuple[Taxonomy, TaxonomyNode]]) -> str:
    texts = {node.rationale for _, node in members}
    if len(texts) == 1:
        return next(iter(texts))
    parts = sorted((tax.taxonomy_id, node.rationale) for tax, node in members)
    return " | ".join(f"[{tax_id}] {rationale}" for tax_id, rationale in parts)


def _survivor_source(members: list[tuple[Taxonomy, TaxonomyNode]], text: str) -> str:
    owners = [tax.taxonomy_id for tax, node in members
              if (node.label or node.description) == text]
    return min(owners) if owners else min(tax.taxonomy_id for tax, _ in members)


_MERGE_PROVENANCE = Provenance(ProvenanceKind.MERGE)


def _merge_descriptions(intention_members, ids, report):
    """Group one surviving intention's descriptions by normalized text."""
    groups: dict[str, list[tuple[Taxonomy, TaxonomyNode]]] = {}
    for tax, root in intention_members:
        for child_id in root.children:
            child = tax.nodes[child_id]
            groups.setdefault(normalize_label(child.description or ""), []).append(
                (tax, child))

    out_nodes: dict[str, TaxonomyNode] = {}
    out_ids: list[str] = []
    for key in sorted(groups):
        members = groups[key]
        text = min(node.description or "" for _, node in members)
        desc_id = ids.next()
        pairs = {}
        for tax, node in members:
            for example_id in node.children:
                example = tax.nodes[example_id]
                pair = (example.example.original, example.example.revised)
                pairs.setdefault(pair, []).append((tax, example))
        example_ids = []
        for pair in sorted(pairs):
            example_members = pairs[pair]
            example_id = ids.next()
            example_ids.append(example_id)
            out_nodes[example_id] = make_example(
                example_id, pair[0], pair[1],
                _merge_rationales(example_members), provenance=_MERGE_PROVENANCE)
            report.added_from[example_id] = min(
                tax.taxonomy_id for tax, _ in example_members)
            if len(example_members) > 1:
                report.collapsed.append(CollapseRecord(
                    survivor_id=example_id,
                    absorbed=tuple(sorted(f"{tax.taxonomy_id}:{node.id}"
                                          for tax, node in example_members)),
                    reason=CollapseReason.EXACT_NORMALIZED_MATCH))
        out_nodes[desc_id] = make_description(
            desc_id, text, _merge_rationales(members),
            children=tuple(example_ids), provenance=_MERGE_PROVENANCE)
        report.added_from[desc_id] = _survivor_source(members, text)
        out_ids.append(desc_id)
        if len(members) > 1:
            report.collapsed.append(CollapseRecord(
                survivor_id=desc_id,
                absorbed=tuple(sorted(f"{tax.taxonomy_id}:{node.id}"
                                      for tax, node in members)),
                reason=CollapseReason.EXACT_NORMALIZED_MATCH))
    return out_nodes, out_ids


def merge(inputs: list[Taxonomy], provider: Provider | None = None,
          model: str = "scripted", taxonomy_id: str | None = None,
          clock=now_rfc3339) -> tuple[Taxonomy, MergeReport]:
    if not inputs:
        raise InvalidInput("merge needs at least one input taxonomy")
    domain, task = inputs[0].domain, inputs[0].task
    for tax in inputs:
        if (tax.domain, tax.task) != (domain, task):
            raise DomainMismatch(
                f"input {tax.taxonomy_id!r} is {tax.domain}/{tax.task}, "
                f"expected {domain}/{task}")
        report = validate_structure(tax)
        if not report.ok:
            raise InvalidInput(
                f"input {tax.taxonomy_id!r} is invalid: {report.summary()}")

    report = MergeReport(inputs=[(t.taxonomy_id, t.version) for t in inputs])
    ids = IdAllocator(prefix="m")

    groups: dict[str, list[tuple[Taxonomy, TaxonomyNode]]] = {}
    for tax in inputs:
        for root in tax.root_nodes():
            groups.setdefault(normalize_label(root.label or ""), []).append((tax, root))

    nodes: dict[str, TaxonomyNode] = {}
    roots: list[str] = []
    for key in sorted(groups):
        members = groups[key]
        label = min(node.label or "" for _, node in members)
        root_id = ids.next()
        child_nodes, child_ids = _merge_descriptions(members, ids, report)
        nodes.update(child_nodes)
        nodes[root_id] = make_intention(
            root_id, label, _merge_rationales(members),
            children=tuple(child_ids), provenance=_MERGE_PROVENANCE)
        report.added_from[root_id] = _survivor_source(members, label)
        roots.append(root_id)
        if len(members) > 1:
            report.collapsed.append(CollapseRecord(
                survivor_id=root_id,
                absorbed=tuple(sorted(f"{tax.taxonomy_id}:{node.id}"
                                      for tax, node in members)),
                reason=CollapseReason.EXACT_NORMALIZED_MATCH))

    merged = Taxonomy(
        taxonomy_id=taxonomy_id or _merged_id(inputs, domain, task),
        domain=domain, task=task, version=1, parent_version=None,
        created_at=clock(), roots=tuple(roots), nodes=nodes)

    if provider is not None:
        merged = _semantic_pass(merged, provider, model, report)

    report.verification = validate_structure(merged)
    if not report.verification.ok:
        raise InvalidInput(
            f"merged result failed validation: {report.verification.summary()}")
    return merged, report


def _merged_id(inputs: list[Taxonomy], domain: str, task: str) -> str:
    return f"merged-{domain}-{task}-{len(inputs)}"


# ---------------------------------------------------------------------------
# Pass 2: LLM-proposed collapses
# ---------------------------------------------------------------------------


def _edit_distance(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1,
                               previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def _near_duplicates(texts: dict[str, str]) -> list[tuple[str, str]]:
    """Pairs of node ids whose normalized texts share a token or sit within
    edit distance 3 of each other."""
    out = []
    items = sorted(texts.items(), key=lambda kv: (kv[1], kv[0]))
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            (id_a, text_a), (id_b, text_b) = items[i], items[j]
            if text_a == text_b:
                continue
            if set(text_a.split()) & set(text_b.split()) or _edit_distance(text_a, text_b) <= 3:
                out.append((id_a, id_b))
    return out


def _proposal_request(text_a: str, text_b: str, model: str) -> ChatRequest:
    prompt = (
        "Two entries in a merged taxonomy of writing-revision intentions may "
        "duplicate each other.\n"
        f"A: {text_a}\n"
        f"B: {text_b}\n"
        "If they mean the same thing, reply with exactly two lines:\n"
        "MERGE: <one combined wording>\n"
        "RATIONALE: <one sentence explaining why>\n"
        "If they are genuinely distinct, reply with the single line:\n"
        "KEEP")
    return ChatRequest(model=model, request_tag="step3.merge",
                       messages=(ChatMessage(Role.USER, prompt),))


def propose_semantic_merges(pairs: list[tuple[str, str, str, str]],
                            provider: Provider, model: str = "scripted",
                            dropped: list | None = None) -> list[MergeProposal]:
    """pairs: (id_a, text_a, id_b, text_b), all from the same level.
    Unparseable responses are dropped (recorded in ``dropped`` if given)."""
    proposals = []
    for id_a, text_a, id_b, text_b in pairs:
        content = provider.complete(_proposal_request(text_a, text_b, model)).content
        lines = [line.strip() for line in content.strip().splitlines() if line.strip()]
        if not lines:
            _record(dropped, id_a, id_b, "empty response")
            continue
        if lines[0].upper().startswith("KEEP"):
            continue
        merged_text = rationale = None
        for line in lines:
            if line.startswith("MERGE:"):
                merged_text = line[len("MERGE:"):].strip()
            elif line.startswith("RATIONALE:"):
                rationale = line[len("RATIONALE:"):].strip()
        if not merged_text or not rationale:
            _record(dropped, id_a, id_b, f"unparseable proposal: {lines[0][:60]}")
            continue
        proposals.append(MergeProposal(left=id_a, right=id_b,
                                       merged_text=merged_text, rationale=rationale))
    return proposals


def _record(dropped: list | None, id_a: str, id_b: str, why: str) -> None:
    if dropped is not None:
        dropped.append(f"({id_a}, {id_b}): {why}")


def _apply_proposal(tax: Taxonomy, proposal: MergeProposal) -> Taxonomy:
    """Collapse proposal.right into proposal.left, relabeling the survivor."""
    survivor = tax.nodes[proposal.left]
    absorbed = tax.nodes[proposal.right]
    union_children = survivor.children + tuple(
        c for c in absorbed.children if c not in survivor.children)
    rationale = survivor.rationale
    if proposal.rationale and proposal.rationale not in rationale:
        rationale = f"{rationale} | {proposal.rationale}"
    if survivor.level is Level.INTENTION:
        new_survivor = replace(survivor, label=proposal.merged_text,
                               children=union_children, rationale=rationale)
    else:
        new_survivor = replace(survivor, description=proposal.merged_text,
                               children=union_children, rationale=rationale)
    nodes = {k: v for k, v in tax.nodes.items() if k != proposal.right}
    nodes[proposal.left] = new_survivor
    roots = tuple(r for r in tax.roots if r != proposal.right)
    for node_id, node in list(nodes.items()):
        if proposal.right in node.children:
            nodes[node_id] = replace(node, children=tuple(
                c for c in node.children if c != proposal.right))
    return replace(tax, nodes=nodes, roots=roots)


def _semantic_pass(merged: Taxonomy, provider: Provider, model: str,
                   report: MergeReport) -> Taxonomy:
    candidates: list[tuple[str, str, str, str]] = []
    root_texts = {r: normalize_label(merged.nodes[r].label or "") for r in merged.roots}
    for id_a, id_b in _near_duplicates(root_texts):
        candidates.append((id_a, merged.nodes[id_a].label or "",
                           id_b, merged.nodes[id_b].label or ""))
    for root in merged.root_nodes():
        sibling_texts = {c: normalize_label(merged.nodes[c].description or "")
                         for c in root.children}
        for id_a, id_b in _near_duplicates(sibling_texts):
            candidates.append((id_a, merged.nodes[id_a].description or "",
                               id_b, merged.nodes[id_b].description or ""))

    proposals = propose_semantic_merges(candidates, provider, model,
                                        dropped=report.skipped_proposals)
    for proposal in sorted(proposals, key=lambda p: (p.left, p.right)):
        if proposal.left not in merged.nodes or proposal.right not in merged.nodes:
            report.skipped_proposals.append(
                f"({proposal.left}, {proposal.right}): target vanished in earlier collapse")
            continue
        trial = _apply_proposal(merged, proposal)
        if validate_structure(trial).ok:
            merged = trial
            report.collapsed.append(CollapseRecord(
                survivor_id=proposal.left, absorbed=(proposal.right,),
                reason=CollapseReason.LLM_PROPOSED_MERGE))
        else:
            report.skipped_proposals.append(
                f"({proposal.left}, {proposal.right}): merged text fails validation")
    return merged


# ---------------------------------------------------------------------------
# Report export
# ---------------------------------------------------------------------------


def merge_report_to_dict(report: MergeReport) -> dict:
    return {
        "inputs": [{"taxonomy_id": t, "version": v} for t, v in report.inputs],
        "collapsed": [{"survivor": c.survivor_id, "absorbed": list(c.absorbed),
                       "reason": c.reason.value} for c in report.collapsed],
        "added_from": dict(sorted(report.added_from.items())),
        "skipped_proposals": list(report.skipped_proposals),
        "verification": {
            "ok": report.verification.ok,
            "violations": [{"code": v.code.value, "node_id": v.node_id,
                            "message": v.message}
                           for v in report.verification.violations],
        },
    }


def merged_nodes_preview(tax: Taxonomy) -> list[dict]:
    """Depth-first node dicts; used by the CLI collapse table."""
    return [node_to_dict(n) for n in tax.iter_depth_first()]
