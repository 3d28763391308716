"""Shared fixtures: the legal-email fixture taxonomy and random tree builders."""

from __future__ import annotations

import random

import pytest

from taxonomy_workbench.taxonomy import (
    IdAllocator,
    Level,
    Provenance,
    ProvenanceKind,
    Taxonomy,
    TaxonomyNode,
    make_description,
    make_example,
    make_intention,
    normalize_label,
)

FIXTURE_RATIONALE = "Grounded in common revision practice for legal email writing."
FIXTURE_CREATED_AT = "2024-01-01T00:00:00Z"

#: (description, [(original, revised), ...]) under the single fixture intention.
LEGAL_EMAIL_TREE = {
    "intention": "Legal Argument Strengthening",
    "descriptions": [
        ("Adding supporting legal precedents to reinforce an argument.", [
            ("The case we are handling has similarities with other cases.",
             "The case we are handling is similar to Smith v. Jones, where the court held a comparable view on contractual obligations."),
            ("Our argument in this lawsuit is strong.",
             "Our argument, bolstered by the precedent set in Brown v. Board of Education, is particularly strong in advocating for equal rights."),
        ]),
        ("Integrating additional factual evidence to solidify a legal stance.", [
            ("Our client's position in this matter is legally sound.",
             "Our client's position is legally sound, supported by the financial records and witness statements provided."),
            ("This case is straightforward.",
             "This case is straightforward, as evidenced by the detailed timeline of events and corroborating emails."),
        ]),
        ("Enhancing the persuasiveness of the argument by refining logical reasoning.", [
            ("We believe our client is not liable.",
             "Our client is not liable, as logically, the responsibility falls on the contractor, given the terms of the agreement."),
            ("This case should be dismissed.",
             "This case should be dismissed, considering the lack of causation between our client's actions and the alleged damages"),
        ]),
        ("Incorporating expert testimony to bolster legal claims.", [
            ("Our stance on the patent infringement is valid.",
             "Our stance is strengthened by the expert testimony of Dr. Smith, a renowned patent specialist."),
            ("The damages claimed are excessive.",
             "The damages claimed are excessive, as per the assessment of leading industry expert John Doe."),
        ]),
    ],
}


def build_legal_email_taxonomy(taxonomy_id: str = "legal-email") -> Taxonomy:
    """The 1-intention / 4-description / 8-example fixture, ids n1..n13.

    Matches what a scripted generation run of the same content produces.
    """
    ids = IdAllocator()
    nodes: dict[str, TaxonomyNode] = {}
    root_id = ids.next()
    desc_entries = []
    for description, _ in LEGAL_EMAIL_TREE["descriptions"]:
        desc_entries.append((ids.next(), description))
    example_ids: dict[str, list[str]] = {}
    for (desc_id, _), (_, examples) in zip(desc_entries, LEGAL_EMAIL_TREE["descriptions"]):
        example_ids[desc_id] = []
        for original, revised in examples:
            ex_id = ids.next()
            example_ids[desc_id].append(ex_id)
            nodes[ex_id] = make_example(ex_id, original, revised, FIXTURE_RATIONALE)
    for desc_id, description in desc_entries:
        nodes[desc_id] = make_description(desc_id, description, FIXTURE_RATIONALE,
                                          children=tuple(example_ids[desc_id]))
    nodes[root_id] = make_intention(root_id, LEGAL_EMAIL_TREE["intention"], FIXTURE_RATIONALE,
                                    children=tuple(d for d, _ in desc_entries))
    return Taxonomy(taxonomy_id=taxonomy_id, domain="legal", task="email", version=1,
                    parent_version=None, created_at=FIXTURE_CREATED_AT,
                    roots=(root_id,), nodes=nodes)


@pytest.fixture
def legal_email() -> Taxonomy:
    return build_legal_email_taxonomy()


def build_tree(taxonomy_id: str, roots, *, domain: str = "legal", task: str = "email",
               rationale: str = "Seen repeatedly in expert revisions.") -> Taxonomy:
    """Compact literal builder.

    roots: [(label, [(description, [(original, revised), ...]), ...]), ...]
    """
    ids = IdAllocator()
    nodes: dict[str, TaxonomyNode] = {}
    root_ids = []
    for label, descs in roots:
        root_id = ids.next()
        desc_ids = []
        for description, pairs in descs:
            desc_id = ids.next()
            ex_ids = []
            for original, revised in pairs:
                ex_id = ids.next()
                nodes[ex_id] = make_example(ex_id, original, revised, rationale)
                ex_ids.append(ex_id)
            nodes[desc_id] = make_description(desc_id, description, rationale,
                                              children=tuple(ex_ids))
            desc_ids.append(desc_id)
        nodes[root_id] = make_intention(root_id, label, rationale,
                                        children=tuple(desc_ids))
        root_ids.append(root_id)
    return Taxonomy(taxonomy_id=taxonomy_id, domain=domain, task=task, version=1,
                    parent_version=None, created_at=FIXTURE_CREATED_AT,
                    roots=tuple(root_ids), nodes=nodes)


def canonical_shape(tax: Taxonomy):
    """Order-, id- and provenance-insensitive view of the tree content.

    Two taxonomies with equal shapes carry the same labels, descriptions,
    example pairs and rationales, regardless of node ids or sibling order.
    """
    roots = []
    for root in tax.root_nodes():
        descs = []
        for desc in tax.children_of(root.id):
            pairs = tuple(sorted((e.example.original, e.example.revised)
                                 for e in tax.children_of(desc.id)))
            descs.append((desc.description, pairs, desc.rationale))
        roots.append((root.label, tuple(sorted(descs)), root.rationale))
    return tuple(sorted(roots))


# ---------------------------------------------------------------------------
# Random taxonomy construction
# ---------------------------------------------------------------------------

_ADJECTIVES = ["Clear", "Concise", "Formal", "Persuasive", "Accurate", "Direct",
               "Structured", "Neutral", "Actionable", "Polished", "Factual", "Grounded"]
_NOUNS = ["Tone", "Evidence", "Structure", "Wording", "Emphasis", "Framing",
          "Citations", "Formatting", "Terminology", "Argument", "Clarity", "Flow"]
_WORDS = ["draft", "review", "client", "meeting", "summary", "update", "notes",
          "report", "points", "deadline", "terms", "context", "details", "scope"]


def random_label(rng: random.Random) -> str:
    return f"{rng.choice(_ADJECTIVES)} {rng.choice(_NOUNS)}"


def _unique_texts(rng: random.Random, count: int, maker) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    guard = 0
    while len(out) < count:
        guard += 1
        text = maker(rng) if guard < 200 else f"{maker(rng)} {guard}"
        key = normalize_label(text)
        if key not in seen:
            seen.add(key)
            out.append(text)
    return out


def _random_sentence(rng: random.Random, n_words: int | None = None) -> str:
    n = n_words or rng.randint(3, 7)
    words = [rng.choice(_WORDS) for _ in range(n)]
    return (" ".join(words) + ".").capitalize()


def make_random_taxonomy(rng: random.Random, *, taxonomy_id: str = "rand",
                         domain: str = "legal", task: str = "email",
                         n_intentions: int | None = None,
                         label_pool: list[str] | None = None,
                         id_prefix: str = "n") -> Taxonomy:
    """Structurally valid random taxonomy; labels may come from a shared pool
    so that pairs of taxonomies overlap (for merge tests)."""
    ids = IdAllocator(prefix=id_prefix)
    n_roots = n_intentions if n_intentions is not None else rng.randint(1, 4)
    if label_pool is not None:
        pool = list(label_pool)
        rng.shuffle(pool)
        labels = pool[:n_roots]
    else:
        labels = _unique_texts(rng, n_roots, random_label)
    nodes: dict[str, TaxonomyNode] = {}
    roots: list[str] = []
    for label in labels:
        root_id = ids.next()
        desc_texts = _unique_texts(rng, rng.randint(1, 3), _random_sentence)
        desc_ids: list[str] = []
        for text in desc_texts:
            desc_id = ids.next()
            ex_ids: list[str] = []
            for _ in range(rng.randint(1, 2)):
                ex_id = ids.next()
                original = _random_sentence(rng)
                revised = original[:-1] + " " + rng.choice(_WORDS) + "."
                nodes[ex_id] = make_example(ex_id, original, revised,
                                            f"Keeps the {rng.choice(_WORDS)} explicit.")
                ex_ids.append(ex_id)
            nodes[desc_id] = make_description(desc_id, text,
                                              f"Covers the {rng.choice(_WORDS)} angle.",
                                              children=tuple(ex_ids))
            desc_ids.append(desc_id)
        nodes[root_id] = make_intention(root_id, label,
                                        f"Recurring revision goal around {rng.choice(_WORDS)}.",
                                        children=tuple(desc_ids))
        roots.append(root_id)
    return Taxonomy(taxonomy_id=taxonomy_id, domain=domain, task=task, version=1,
                    parent_version=None, created_at=FIXTURE_CREATED_AT,
                    roots=tuple(roots), nodes=nodes)


def mutate_taxonomy(tax: Taxonomy, rng: random.Random) -> Taxonomy:
    """A random valid next version of ``tax`` (new node / removal / edit /
    reorder), for diff round-trip properties."""
    from dataclasses import replace

    nodes = dict(tax.nodes)
    roots = list(tax.roots)
    next_id = max((int(i[1:]) for i in nodes if i[1:].isdigit()), default=0) + 1
    op = rng.choice(["add_description", "add_intention", "remove_subtree",
                     "edit_rationale", "reorder_roots", "add_example"])

    if op == "add_intention":
        new_id = f"n{next_id}"
        label = _unique_texts(rng, 1, random_label)[0]
        taken = {normalize_label(n.label or "") for n in tax.root_nodes()}
        while normalize_label(label) in taken:
            label = f"{label} {next_id}"
        nodes[new_id] = make_intention(new_id, label, "Fresh angle worth tracking.")
        roots.insert(rng.randint(0, len(roots)), new_id)
    elif op == "add_description":
        parent_id = rng.choice([r for r in roots])
        parent = nodes[parent_id]
        taken = {normalize_label(nodes[c].description or "") for c in parent.children}
        text = _random_sentence(rng)
        while normalize_label(text) in taken:
            text = f"{text[:-1]} {next_id}."
        new_id = f"n{next_id}"
        nodes[new_id] = make_description(new_id, text, "Observed in expert feedback.")
        position = rng.randint(0, len(parent.children))
        children = list(parent.children)
        children.insert(position, new_id)
        nodes[parent_id] = replace(parent, children=tuple(children))
    elif op == "add_example":
        desc_ids = [n.id for n in nodes.values() if n.level is Level.DESCRIPTION]
        parent_id = rng.choice(desc_ids)
        parent = nodes[parent_id]
        new_id = f"n{next_id}"
        original = _random_sentence(rng)
        nodes[new_id] = make_example(new_id, original, original[:-1] + " now.",
                                     "Illustrates the pattern.")
        nodes[parent_id] = replace(parent, children=parent.children + (new_id,))
    elif op == "remove_subtree" and len(roots) > 1:
        victim = rng.choice(roots)
        doomed = {victim}
        stack = [victim]
        while stack:
            for child in nodes[stack.pop()].children:
                doomed.add(child)
                stack.append(child)
        nodes = {k: v for k, v in nodes.items() if k not in doomed}
        roots = [r for r in roots if r != victim]
    elif op == "reorder_roots" and len(roots) > 1:
        rng.shuffle(roots)
    else:
        victim = rng.choice(list(nodes))
        nodes[victim] = replace(nodes[victim], rationale=f"Revised reasoning {next_id}.")

    return replace(tax, version=tax.version + 1, parent_version=tax.version,
                   created_at=f"2024-01-01T00:00:{tax.version + 1:02d}Z",
                   nodes=nodes, roots=tuple(roots))


def corrupt_taxonomy(tax: Taxonomy, kind: str) -> Taxonomy:
    """Break exactly one invariant; used for the validation iff-property."""
    from dataclasses import replace

    nodes = dict(tax.nodes)
    roots = list(tax.roots)
    first_root = nodes[roots[0]]

    if kind == "duplicate_label":
        if len(roots) < 2:
            new = make_intention("dup-root", (first_root.label or "x").upper() + "  ",
                                 "Deliberate duplicate.")
            nodes[new.id] = new
            roots.append(new.id)
        else:
            second = nodes[roots[1]]
            nodes[second.id] = replace(second, label=(first_root.label or "") + ".")
    elif kind == "empty_rationale":
        victim = sorted(nodes)[0]
        nodes[victim] = replace(nodes[victim], rationale="   ")
    elif kind == "dangling_child":
        nodes[first_root.id] = replace(first_root, children=first_root.children + ("ghost",))
    elif kind == "bad_child_level":
        desc_id = first_root.children[0]
        example_id = nodes[desc_id].children[0]
        nodes[first_root.id] = replace(
            first_root, children=tuple(example_id if c == desc_id else c
                                       for c in first_root.children))
        nodes[desc_id] = replace(nodes[desc_id],
                                 children=tuple(c for c in nodes[desc_id].children
                                                if c != example_id))
    elif kind == "identical_example_pair":
        ex = next(n for n in nodes.values() if n.level is Level.EXAMPLE)
        nodes[ex.id] = replace(ex, example=replace(ex.example, revised=ex.example.original))
    elif kind == "multi_parent":
        desc_id = first_root.children[0]
        nodes[first_root.id] = replace(first_root,
                                       children=first_root.children + (desc_id,))
    elif kind == "orphan_node":
        nodes["stray"] = make_description("stray", "Nobody points here.", "Still reasoned.")
    else:
        raise ValueError(kind)

    return replace(tax, nodes=nodes, roots=tuple(roots))


CORRUPTION_CODES = {
    "duplicate_label": "duplicate_label",
    "empty_rationale": "empty_rationale",
    "dangling_child": "dangling_child",
    "bad_child_level": "bad_child_level",
    "identical_example_pair": "identical_example_pair",
    "multi_parent": "multi_parent",
    "orphan_node": "orphan_node",
}
