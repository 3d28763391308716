"""Edit extraction: LCS spans, reconstruction, markup projections."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taxonomy_workbench.editdiff import (
    EditSpan,
    SpanKind,
    apply_edits,
    markup_to_original,
    markup_to_revised,
    render_edit_markup,
    sentence_edit_diff,
    span_to_dict,
    split_sentences,
    tokenize,
)
from taxonomy_workbench.errors import InconsistentEdits

# Oracles below were worked out by hand from the token-LCS walk
# (deletion preferred on ties) before the implementation existed.


def test_identical_texts_no_spans():
    text = "We will meet Monday."
    assert sentence_edit_diff(text, text) == []


def test_empty_inputs_yield_empty_list():
    assert sentence_edit_diff("", "") == []
    assert sentence_edit_diff("   ", "") == []


def test_substitution_case():
    spans = sentence_edit_diff("essential", "absolutely necessary")
    assert spans == [
        EditSpan(SpanKind.DELETION, ("essential",), 0, 0),
        EditSpan(SpanKind.ADDITION, ("absolutely", "necessary"), 1, 0),
    ]
    assert apply_edits("essential", spans) == "absolutely necessary"


def test_insertion_with_attached_punctuation():
    original = "We will meet Monday."
    revised = "We will meet on Monday at noon."
    spans = sentence_edit_diff(original, revised)
    # "Monday." (period attached) shares no token with the revised tail,
    # so the whole tail turns over rather than splitting around "Monday".
    assert spans == [
        EditSpan(SpanKind.DELETION, ("Monday.",), 3, 0),
        EditSpan(SpanKind.ADDITION, ("on", "Monday", "at", "noon."), 4, 0),
    ]
    assert apply_edits(original, spans) == revised


def test_pure_insertion_before_kept_token():
    spans = sentence_edit_diff("The fee is high.", "The fee is too high.")
    assert spans == [EditSpan(SpanKind.ADDITION, ("too",), 3, 0)]
    assert render_edit_markup("The fee is high.", spans) == "The fee is {+ too +} high."


def test_multi_sentence_diff_keeps_global_anchors():
    original = "Please review. Send comments."
    revised = "Please review carefully. Send comments."
    spans = sentence_edit_diff(original, revised)
    assert spans == [
        EditSpan(SpanKind.DELETION, ("review.",), 1, 0),
        EditSpan(SpanKind.ADDITION, ("review", "carefully."), 2, 0),
    ]
    assert apply_edits(original, spans) == revised


def test_extra_revised_sentence_is_appended_addition():
    spans = sentence_edit_diff("We met.", "We met. Minutes attached.")
    assert spans == [EditSpan(SpanKind.ADDITION, ("Minutes", "attached."), 2, 1)]


def test_extra_original_sentence_is_deletion():
    spans = sentence_edit_diff("We met. Minutes attached.", "We met.")
    assert spans == [EditSpan(SpanKind.DELETION, ("Minutes", "attached."), 2, 1)]


def test_anchors_non_decreasing_and_tokens_nonempty():
    spans = sentence_edit_diff(
        "One two three. Four five six. Seven eight.",
        "One too three. Four six nine. Seven eight ten.")
    anchors = [s.anchor for s in spans]
    assert anchors == sorted(anchors)
    assert all(s.tokens for s in spans)


def test_sentence_split_rule():
    assert split_sentences("We met. Then we left.") == ["We met.", "Then we left."]
    # only an uppercase follower opens a new sentence
    assert split_sentences("Costs rose approx. twofold.") == \
        ["Costs rose approx. twofold."]
    # the rule is deliberately simplistic: "v. Jones" splits
    assert split_sentences("See Smith v. Jones.") == ["See Smith v.", "Jones."]
    assert split_sentences("Really? Yes! Fine.") == ["Really?", "Yes!", "Fine."]


def test_markup_and_projections():
    original = "We will meet Monday."
    revised = "We will meet on Monday at noon."
    spans = sentence_edit_diff(original, revised)
    markup = render_edit_markup(original, spans)
    assert markup == "We will meet {- Monday. -} {+ on Monday at noon. +}"
    assert markup_to_original(markup) == original
    assert markup_to_revised(markup) == revised


def test_no_edits_render_unchanged():
    assert render_edit_markup("Keep this text.", []) == "Keep this text."


def test_inconsistent_anchor_rejected():
    bad = [EditSpan(SpanKind.ADDITION, ("x",), 99, 0)]
    with pytest.raises(InconsistentEdits):
        apply_edits("only three tokens", bad)


def test_inconsistent_deletion_tokens_rejected():
    bad = [EditSpan(SpanKind.DELETION, ("wrong",), 0, 0)]
    with pytest.raises(InconsistentEdits):
        apply_edits("right word", bad)


def test_out_of_order_edits_rejected():
    bad = [EditSpan(SpanKind.ADDITION, ("x",), 2, 0),
           EditSpan(SpanKind.ADDITION, ("y",), 1, 0)]
    with pytest.raises(InconsistentEdits):
        apply_edits("a b c", bad)


def test_span_to_dict_shape():
    span = EditSpan(SpanKind.ADDITION, ("on",), 3, 0)
    assert span_to_dict(span) == {"kind": "addition", "tokens": ["on"],
                                  "anchor": 3, "sentence_index": 0}


# ---------------------------------------------------------------------------
# Reconstruction soundness on random token sequences
# ---------------------------------------------------------------------------

_VOCAB = ["the", "draft", "review", "client", "notes", "send", "by", "noon",
          "Friday.", "soon.", "Please", "We", "This", "meeting", "terms"]


def _random_text(rng: random.Random) -> str:
    return " ".join(rng.choice(_VOCAB) for _ in range(rng.randint(0, 14)))


def _perturb(text: str, rng: random.Random) -> str:
    tokens = tokenize(text)
    out = []
    for token in tokens:
        roll = rng.random()
        if roll < 0.15:
            continue                       # drop
        if roll < 0.3:
            out.append(rng.choice(_VOCAB))  # replace
        else:
            out.append(token)
        if rng.random() < 0.15:
            out.append(rng.choice(_VOCAB))  # insert
    return " ".join(out)


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction_exact_on_random_pairs(seed):
    rng = random.Random(seed)
    for _ in range(300):
        original = _random_text(rng)
        revised = _perturb(original, rng) if rng.random() < 0.7 else _random_text(rng)
        spans = sentence_edit_diff(original, revised)
        assert apply_edits(original, spans) == " ".join(tokenize(revised))
        markup = render_edit_markup(original, spans)
        assert markup_to_original(markup) == " ".join(tokenize(original))
        assert markup_to_revised(markup) == " ".join(tokenize(revised))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(_VOCAB), max_size=12),
       st.lists(st.sampled_from(_VOCAB), max_size=12))
def test_reconstruction_exact_hypothesis(orig_tokens, rev_tokens):
    original, revised = " ".join(orig_tokens), " ".join(rev_tokens)
    spans = sentence_edit_diff(original, revised)
    assert apply_edits(original, spans) == revised
    anchors = [s.anchor for s in spans]
    assert anchors == sorted(anchors)
