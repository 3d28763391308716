"""Token-level edit extraction between an original and a revised text.

Texts are sentence-segmented, each aligned sentence pair is diffed with a
token LCS, and the differences come out as Addition/Deletion spans anchored
to token positions in the original. Applying the spans to the original
rebuilds the revised text; rendering them inline gives the
``{+ added +}`` / ``{- removed -}`` review view.

Tokens are maximal runs of non-whitespace, so punctuation stays attached to
its word. Reconstruction joins tokens with single spaces; texts are treated
as token sequences, not raw bytes.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .errors import InconsistentEdits


class SpanKind(enum.Enum):
    ADDITION = "addition"
    DELETION = "deletion"


@dataclass(frozen=True)
class EditSpan:
    kind: SpanKind
    tokens: tuple[str, ...]
    anchor: int          # token index into the original text
    sentence_index: int


# break after ./!/? when the next sentence starts with an uppercase letter
_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+(?=[A-Z])")


def split_sentences(text: str) -> list[str]:
    text = text.strip()
    if not text:
        return []
    return _SENTENCE_BREAK.split(text)


def tokenize(text: str) -> list[str]:
    return text.split()


def _span_runs(orig: list[str], rev: list[str], base: int,
               sentence_index: int) -> list[EditSpan]:
    """LCS walk emitting grouped deletion/addition runs.

    Ties prefer deletion, so a substitution comes out as the deletion run
    followed by the addition run anchored after it.
    """
    n, m = len(orig), len(rev)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, ahead = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            row[j] = ahead[j + 1] + 1 if orig[i] == rev[j] else max(ahead[j], row[j + 1])

    spans: list[EditSpan] = []
    run_kind: SpanKind | None = None
    run_tokens: list[str] = []
    run_anchor = 0

    def flush():
        nonlocal run_kind, run_tokens
        if run_kind is not None:
            spans.append(EditSpan(run_kind, tuple(run_tokens), run_anchor,
                                  sentence_index))
        run_kind, run_tokens = None, []

    def emit(kind: SpanKind, token: str, anchor: int):
        nonlocal run_kind, run_anchor
        if run_kind is not kind:
            flush()
            run_kind, run_anchor = kind, anchor
        run_tokens.append(token)

    i = j = 0
    while i < n or j < m:
        if i < n and j < m and orig[i] == rev[j]:
            flush()
            i += 1
            j += 1
        elif j == m or (i < n and dp[i + 1][j] >= dp[i][j + 1]):
            emit(SpanKind.DELETION, orig[i], base + i)
            i += 1
        else:
            emit(SpanKind.ADDITION, rev[j], base + i)
            j += 1
    flush()
    return spans


def sentence_edit_diff(original: str, revised: str) -> list[EditSpan]:
    orig_sentences = split_sentences(original)
    rev_sentences = split_sentences(revised)
    spans: list[EditSpan] = []
    base = 0
    for k in range(max(len(orig_sentences), len(rev_sentences))):
        orig_tokens = tokenize(orig_sentences[k]) if k < len(orig_sentences) else []
        rev_tokens = tokenize(rev_sentences[k]) if k < len(rev_sentences) else []
        spans.extend(_span_runs(orig_tokens, rev_tokens, base, k))
        base += len(orig_tokens)
    return spans


def _walk(original: str, edits: list[EditSpan], on_kept, on_deletion, on_addition):
    """Shared anchor walk for reconstruction and markup; validates anchors."""
    tokens = tokenize(original)
    ptr = 0
    for span in edits:
        if span.anchor < ptr or span.anchor > len(tokens):
            raise InconsistentEdits(
                f"anchor {span.anchor} does not fit original of {len(tokens)} tokens")
        for token in tokens[ptr:span.anchor]:
            on_kept(token)
        ptr = span.anchor
        if span.kind is SpanKind.DELETION:
            window = tuple(tokens[ptr:ptr + len(span.tokens)])
            if window != span.tokens:
                raise InconsistentEdits(
                    f"deletion at {span.anchor} expects {span.tokens}, original has {window}")
            on_deletion(span.tokens)
            ptr += len(span.tokens)
        else:
            on_addition(span.tokens)
    for token in tokens[ptr:]:
        on_kept(token)


def apply_edits(original: str, edits: list[EditSpan]) -> str:
    out: list[str] = []
    _walk(original, edits,
          on_kept=out.append,
          on_deletion=lambda tokens: None,
          on_addition=out.extend)
    return " ".join(out)


def render_edit_markup(original: str, edits: list[EditSpan]) -> str:
    out: list[str] = []
    _walk(original, edits,
          on_kept=out.append,
          on_deletion=lambda tokens: out.append("{- " + " ".join(tokens) + " -}"),
          on_addition=lambda tokens: out.append("{+ " + " ".join(tokens) + " +}"))
    return " ".join(out)


_ADDITION_REGION = re.compile(r"\{\+ (.*?) \+\}")
_DELETION_REGION = re.compile(r"\{- (.*?) -\}")


def markup_to_original(markup: str) -> str:
    text = _ADDITION_REGION.sub("", markup)
    text = _DELETION_REGION.sub(lambda m: m.group(1), text)
    return " ".join(text.split())


def markup_to_revised(markup: str) -> str:
    text = _DELETION_REGION.sub("", markup)
    text = _ADDITION_REGION.sub(lambda m: m.group(1), text)
    return " ".join(text.split())


def span_to_dict(span: EditSpan) -> dict:
    return {"kind": span.kind.value, "tokens": list(span.tokens),
            "anchor": span.anchor, "sentence_index": span.sentence_index}
