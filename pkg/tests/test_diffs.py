import random
from dataclasses import replace

import pytest

from conftest import make_random_taxonomy, mutate_taxonomy
from taxonomy_workbench.diffs import TAXONOMY_SCOPE, apply_diff, diff_to_dict, diff_versions
from taxonomy_workbench.errors import MismatchedTaxonomy
from taxonomy_workbench.taxonomy import make_description, with_version_bump


def test_identity_diff_is_empty(legal_email):
    diff = diff_versions(legal_email, legal_email)
    assert diff.is_empty


def test_single_added_description(legal_email):
    new_node = make_description("n14", "Addressing Counterarguments",
                                "Anticipates and rebuts the opposing side.")
    nodes = dict(legal_email.nodes)
    nodes["n14"] = new_node
    root = nodes["n1"]
    nodes["n1"] = replace(root, children=root.children + ("n14",))
    newer = with_version_bump(legal_email, nodes, legal_email.roots,
                              "2024-01-01T00:00:01Z")

    diff = diff_versions(legal_email, newer)
    assert [a.node_id for a in diff.added] == ["n14"]
    assert diff.added[0].node == new_node
    assert diff.added[0].parent_id == "n1"
    assert diff.added[0].position == 4
    assert diff.removed == ()
    assert diff.modified == ()


def test_single_rationale_change(legal_email):
    nodes = dict(legal_email.nodes)
    nodes["n3"] = replace(nodes["n3"], rationale="Sharper wording.")
    newer = with_version_bump(legal_email, nodes, legal_email.roots,
                              "2024-01-01T00:00:01Z")

    diff = diff_versions(legal_email, newer)
    assert diff.added == () and diff.removed == ()
    assert len(diff.modified) == 1
    change = diff.modified[0]
    assert (change.node_id, change.field) == ("n3", "rationale")
    assert change.before == legal_email.nodes["n3"].rationale
    assert change.after == "Sharper wording."


def test_removed_subtree_lists_all_nodes(legal_email):
    nodes = {k: v for k, v in legal_email.nodes.items()
             if k not in ("n3", "n8", "n9")}
    root = nodes["n1"]
    nodes["n1"] = replace(root, children=tuple(c for c in root.children if c != "n3"))
    newer = with_version_bump(legal_email, nodes, legal_email.roots,
                              "2024-01-01T00:00:01Z")

    diff = diff_versions(legal_email, newer)
    assert sorted(r.node_id for r in diff.removed) == ["n3", "n8", "n9"]
    assert diff.added == ()
    # dropping a child along with the node itself is not a modification
    assert diff.modified == ()


def test_roots_reorder_reported_at_taxonomy_scope(legal_email):
    rng = random.Random(3)
    two_rooted = make_random_taxonomy(rng, n_intentions=3)
    newer = with_version_bump(two_rooted, dict(two_rooted.nodes),
                              tuple(reversed(two_rooted.roots)),
                              "2024-01-01T00:00:01Z")
    diff = diff_versions(two_rooted, newer)
    assert diff.added == () and diff.removed == ()
    assert [(m.node_id, m.field) for m in diff.modified] == [(TAXONOMY_SCOPE, "roots")]


def test_mismatched_ids_raise(legal_email):
    other = replace(legal_email, taxonomy_id="other")
    with pytest.raises(MismatchedTaxonomy):
        diff_versions(legal_email, other)


def test_apply_reproduces_newer_across_random_mutations():
    rng = random.Random(41)
    for _ in range(80):
        older = make_random_taxonomy(rng, n_intentions=rng.randint(1, 4))
        newer = older
        for _ in range(rng.randint(1, 3)):
            newer = mutate_taxonomy(newer, rng)
        diff = diff_versions(older, newer)
        rebuilt = apply_diff(older, diff)
        assert rebuilt == newer


def test_diff_to_dict_is_json_ready(legal_email):
    import json

    nodes = dict(legal_email.nodes)
    nodes["n14"] = make_description("n14", "Addressing Counterarguments",
                                    "Anticipates and rebuts the opposing side.")
    root = nodes["n1"]
    nodes["n1"] = replace(root, children=root.children + ("n14",))
    newer = with_version_bump(legal_email, nodes, legal_email.roots,
                              "2024-01-01T00:00:01Z")
    doc = diff_to_dict(diff_versions(legal_email, newer))
    text = json.dumps(doc)
    assert "Addressing Counterarguments" in text
    assert doc["added"][0]["parent"] == "n1"
