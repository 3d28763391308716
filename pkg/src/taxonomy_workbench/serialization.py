"""Canonical workbench taxonomy file format (UTF-8 JSON).

Key order and array order are fixed so that equal taxonomies produce
byte-identical output: top-level keys are taxonomy_id, domain, task,
version, parent_version, created_at, nodes; the nodes array is depth-first
preorder (roots in listed order). Roots are recovered on load as the nodes
never referenced as a child, in array order.
"""

from __future__ import annotations

import json

from .errors import InvalidTaxonomy, ParseError, SchemaError
from .taxonomy import (
    ExamplePair,
    Level,
    Provenance,
    ProvenanceKind,
    Taxonomy,
    TaxonomyNode,
    parse_rfc3339,
    validate_structure,
)

_PAYLOAD_KEY = {
    Level.INTENTION: "label",
    Level.DESCRIPTION: "description",
    Level.EXAMPLE: "example",
}


def node_to_dict(node: TaxonomyNode) -> dict:
    body: dict = {"id": node.id, "level": node.level.value}
    if node.level is Level.INTENTION:
        body["label"] = node.label
    elif node.level is Level.DESCRIPTION:
        body["description"] = node.description
    else:
        ex = node.example or ExamplePair("", "")
        body["example"] = {"original": ex.original, "revised": ex.revised}
    body["rationale"] = node.rationale
    body["provenance"] = {"kind": node.provenance.kind.value, "note": node.provenance.note}
    body["children"] = list(node.children)
    return body


def taxonomy_to_dict(tax: Taxonomy) -> dict:
    return {
        "taxonomy_id": tax.taxonomy_id,
        "domain": tax.domain,
        "task": tax.task,
        "version": tax.version,
        "parent_version": tax.parent_version,
        "created_at": tax.created_at,
        "nodes": [node_to_dict(n) for n in tax.iter_depth_first()],
    }


def serialize(tax: Taxonomy) -> bytes:
    """Canonical UTF-8 bytes for a structurally valid taxonomy."""
    report = validate_structure(tax)
    if not report.ok:
        raise InvalidTaxonomy(f"refusing to serialize invalid taxonomy: {report.summary()}",
                              violations=list(report.violations))
    text = json.dumps(taxonomy_to_dict(tax), indent=2, ensure_ascii=False) + "\n"
    return text.encode("utf-8")


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _node_from_dict(raw: object, index: int) -> TaxonomyNode:
    _expect(isinstance(raw, dict), f"nodes[{index}] is not an object")
    assert isinstance(raw, dict)
    node_id = raw.get("id")
    _expect(isinstance(node_id, str) and node_id != "", f"nodes[{index}]: missing or empty id")
    level_raw = raw.get("level")
    try:
        level = Level(level_raw)
    except ValueError:
        raise SchemaError(f"nodes[{index}] ({node_id}): unknown level {level_raw!r}") from None

    present = [k for k in ("label", "description", "example") if k in raw]
    want = _PAYLOAD_KEY[level]
    _expect(present == [want],
            f"nodes[{index}] ({node_id}): {level.value} node must carry exactly the {want!r} field, got {present}")

    label = description = None
    example = None
    if level is Level.INTENTION:
        label = raw["label"]
        _expect(isinstance(label, str), f"nodes[{index}] ({node_id}): label must be a string")
    elif level is Level.DESCRIPTION:
        description = raw["description"]
        _expect(isinstance(description, str), f"nodes[{index}] ({node_id}): description must be a string")
    else:
        ex = raw["example"]
        _expect(isinstance(ex, dict) and isinstance(ex.get("original"), str)
                and isinstance(ex.get("revised"), str),
                f"nodes[{index}] ({node_id}): example must be {{original, revised}} strings")
        example = ExamplePair(original=ex["original"], revised=ex["revised"])

    rationale = raw.get("rationale")
    _expect(isinstance(rationale, str), f"nodes[{index}] ({node_id}): rationale must be a string")

    prov_raw = raw.get("provenance")
    _expect(isinstance(prov_raw, dict), f"nodes[{index}] ({node_id}): provenance must be an object")
    assert isinstance(prov_raw, dict)
    try:
        kind = ProvenanceKind(prov_raw.get("kind"))
    except ValueError:
        raise SchemaError(
            f"nodes[{index}] ({node_id}): unknown provenance kind {prov_raw.get('kind')!r}") from None
    note = prov_raw.get("note", "")
    _expect(isinstance(note, str), f"nodes[{index}] ({node_id}): provenance note must be a string")

    children = raw.get("children")
    _expect(isinstance(children, list) and all(isinstance(c, str) for c in children),
            f"nodes[{index}] ({node_id}): children must be an array of id strings")

    return TaxonomyNode(id=node_id, level=level, label=label, description=description,
                        example=example, rationale=rationale,
                        provenance=Provenance(kind=kind, note=note),
                        children=tuple(children))


def deserialize(data: bytes | str) -> Taxonomy:
    """Parse the workbench file format; structural validity is not enforced
    here (use validate_structure), only syntax and schema shape."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None

    _expect(isinstance(doc, dict), "top level must be a JSON object")
    for key, kinds in (("taxonomy_id", str), ("domain", str), ("task", str), ("version", int),
                       ("created_at", str), ("nodes", list)):
        _expect(key in doc, f"missing top-level field {key!r}")
        _expect(isinstance(doc[key], kinds) and not isinstance(doc[key], bool),
                f"top-level field {key!r} has the wrong type")
    _expect(doc["version"] >= 1, "version must be >= 1")
    parent_version = doc.get("parent_version")
    _expect(parent_version is None or (isinstance(parent_version, int) and not isinstance(parent_version, bool)),
            "parent_version must be an integer or null")
    parse_rfc3339(doc["created_at"])

    nodes: dict[str, TaxonomyNode] = {}
    referenced: set[str] = set()
    order: list[str] = []
    for index, raw in enumerate(doc["nodes"]):
        node = _node_from_dict(raw, index)
        _expect(node.id not in nodes, f"duplicate node id {node.id!r}")
        nodes[node.id] = node
        order.append(node.id)
        referenced.update(node.children)

    roots = tuple(node_id for node_id in order if node_id not in referenced)
    return Taxonomy(taxonomy_id=doc["taxonomy_id"], domain=doc["domain"], task=doc["task"],
                    version=doc["version"], parent_version=parent_version,
                    created_at=doc["created_at"], roots=roots, nodes=nodes)
