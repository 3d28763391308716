"""Hierarchical taxonomy generation: prompt per level, tagged output parsing,
and assembly into a validated version-1 Taxonomy.

Each level is one batch call ("give me the labels") followed by one rationale
call per item. Sub-level prompts carry the ancestor texts verbatim so the
model stays anchored to the branch it is filling in.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import (
    AbortedPartial,
    DuplicateItems,
    ExampleFormatError,
    GenerationError,
    MissingEndTag,
    MissingParent,
    TooFewItems,
    UnbalancedTags,
)
from .gateway import ChatMessage, ChatRequest, Provider, Role
from .taxonomy import (
    IdAllocator,
    Level,
    Taxonomy,
    TaxonomyNode,
    make_description,
    make_example,
    make_intention,
    normalize_label,
    now_rfc3339,
    validate_structure,
)

OPEN_TAG = "<label>"
CLOSE_TAG = "</label>"
END_TAG = "<end>"

#: minimum items per batch below the intention level.
MIN_DESCRIPTIONS = 2
MIN_EXAMPLES = 2

_TEMPLATE_DIR = Path(__file__).parent / "templates"
_TEMPLATE_FILE = {
    Level.INTENTION: "intention.txt",
    Level.DESCRIPTION: "description.txt",
    Level.EXAMPLE: "example.txt",
}


@dataclass(frozen=True)
class GenerationContext:
    domain: str
    task: str
    min_intentions: int = 10
    parent_chain: tuple[tuple[Level, str], ...] = ()
    template_dir: str | None = None

    def child(self, level: Level, text: str) -> "GenerationContext":
        from dataclasses import replace
        return replace(self, parent_chain=self.parent_chain + ((level, text),))


@dataclass(frozen=True)
class TaggedParseResult:
    items: tuple[str, ...]
    saw_end_tag: bool
    raw: str


def parse_tagged(raw: str, open_tag: str = OPEN_TAG, close_tag: str = CLOSE_TAG,
                 end_tag: str = END_TAG) -> TaggedParseResult:
    """Extract every well-formed open/close span before the first end tag.

    Text after the end tag is ignored. An open tag without a matching close
    before the next open tag (or the end of usable input) is malformed.
    """
    if not (open_tag and close_tag and end_tag) or len({open_tag, close_tag, end_tag}) != 3:
        raise ValueError("tags must be nonempty and mutually distinct")
    items: list[str] = []
    pos = 0
    saw_end = False
    while True:
        i_open = raw.find(open_tag, pos)
        i_end = raw.find(end_tag, pos)
        if i_end != -1 and (i_open == -1 or i_end < i_open):
            saw_end = True
            break
        if i_open == -1:
            break
        start = i_open + len(open_tag)
        i_close = raw.find(close_tag, start)
        i_next_open = raw.find(open_tag, start)
        i_next_end = raw.find(end_tag, start)
        blockers = [i for i in (i_next_open, i_next_end) if i != -1]
        if i_close == -1 or (blockers and min(blockers) < i_close):
            raise UnbalancedTags(
                f"open tag at offset {i_open} has no matching {close_tag}")
        items.append(raw[start:i_close].strip())
        pos = i_close + len(close_tag)
    return TaggedParseResult(items=tuple(items), saw_end_tag=saw_end, raw=raw)


def format_tagged(items: list[str], open_tag: str = OPEN_TAG,
                  close_tag: str = CLOSE_TAG, end_tag: str = END_TAG) -> str:
    """The output shape the prompts ask for; inverse of parse_tagged for
    items free of tag tokens."""
    lines = [f"{open_tag} {item} {close_tag}" for item in items]
    lines.append(end_tag)
    return "\n".join(lines)


def _template(ctx: GenerationContext, name: str) -> str:
    base = Path(ctx.template_dir) if ctx.template_dir else _TEMPLATE_DIR
    return (base / name).read_text(encoding="utf-8")


def _parent_text(ctx: GenerationContext) -> str:
    return "\n".join(f"{level.value}: {text}" for level, text in ctx.parent_chain)


def _min_count(ctx: GenerationContext, level: Level) -> int:
    if level is Level.INTENTION:
        return ctx.min_intentions
    return MIN_DESCRIPTIONS if level is Level.DESCRIPTION else MIN_EXAMPLES


def render_prompt(ctx: GenerationContext, level: Level, model: str = "scripted") -> ChatRequest:
    if not ctx.domain.strip() or not ctx.task.strip():
        raise GenerationError("domain and task must be nonempty")
    required_depth = {Level.INTENTION: 0, Level.DESCRIPTION: 1, Level.EXAMPLE: 2}[level]
    if len(ctx.parent_chain) < required_depth:
        raise MissingParent(
            f"{level.value} prompt needs {required_depth} ancestor(s), "
            f"got {len(ctx.parent_chain)}", level=level.value)
    text = _template(ctx, _TEMPLATE_FILE[level]).format(
        domain=ctx.domain, task=ctx.task,
        parent=_parent_text(ctx), min_count=_min_count(ctx, level))
    return ChatRequest(model=model, request_tag=f"step1.{level.value}",
                       messages=(ChatMessage(Role.USER, text),))


def _render_rationale(ctx: GenerationContext, subject: str, model: str) -> ChatRequest:
    text = _template(ctx, "rationale.txt").format(
        domain=ctx.domain, task=ctx.task, parent=subject, min_count=1)
    return ChatRequest(model=model, request_tag="step1.rationale",
                       messages=(ChatMessage(Role.USER, text),))


def _check_batch(parsed: TaggedParseResult, ctx: GenerationContext,
                 level: Level) -> GenerationError | None:
    parent = ctx.parent_chain[-1][1] if ctx.parent_chain else None
    if not parsed.saw_end_tag:
        return MissingEndTag(f"{level.value} batch never terminated with {END_TAG}",
                             level=level.value, parent=parent)
    threshold = _min_count(ctx, level)
    if len(parsed.items) < threshold:
        return TooFewItems(
            f"{level.value} batch produced {len(parsed.items)} item(s), need {threshold}",
            level=level.value, parent=parent)
    seen: dict[str, str] = {}
    for item in parsed.items:
        key = normalize_label(item)
        if key in seen:
            return DuplicateItems(
                f"{level.value} items {seen[key]!r} and {item!r} coincide after normalization",
                level=level.value, parent=parent)
        seen[key] = item
    return None


def generate_level(ctx: GenerationContext, level: Level, provider: Provider,
                   model: str = "scripted") -> list[tuple[str, str]]:
    """One batch call plus one rationale call per item; returns
    [(item_text, rationale), ...] in document order."""
    request = render_prompt(ctx, level, model)
    response = provider.complete(request)
    parsed = parse_tagged(response.content)
    problem = _check_batch(parsed, ctx, level)
    if problem is not None:
        # one repair round: restate the constraint and retry the same call
        repair = ChatRequest(
            model=model, request_tag=request.request_tag,
            messages=request.messages + (
                ChatMessage(Role.ASSISTANT, response.content or "(empty)"),
                ChatMessage(Role.USER,
                            f"That response was rejected: {problem}. "
                            f"Produce the full corrected list in the same format."),
            ))
        response = provider.complete(repair)
        parsed = parse_tagged(response.content)
        problem = _check_batch(parsed, ctx, level)
        if problem is not None:
            raise problem

    out: list[tuple[str, str]] = []
    for item in parsed.items:
        rationale = provider.complete(_render_rationale(ctx, item, model)).content.strip()
        if not rationale:
            raise GenerationError(f"empty rationale for {item!r}",
                                  level=level.value, parent=item)
        out.append((item, rationale))
    return out


def split_example(item: str) -> tuple[str, str]:
    """Split an 'original → revised' line on the first arrow ("→", then "->")."""
    for arrow in ("→", "->"):
        index = item.find(arrow)
        if index != -1:
            original = item[:index].strip()
            revised = item[index + len(arrow):].strip()
            if not original or not revised:
                raise ExampleFormatError(f"example side empty in {item!r}")
            if original == revised:
                raise ExampleFormatError(f"example sides identical in {item!r}")
            return original, revised
    raise ExampleFormatError(f"example line has no arrow separator: {item!r}")


def _slug(text: str) -> str:
    out = "".join(c if c.isalnum() else "-" for c in text.strip().lower())
    while "--" in out:
        out = out.replace("--", "-")
    return out.strip("-") or "taxonomy"


def build_taxonomy(ctx: GenerationContext, provider: Provider,
                   model: str = "scripted", taxonomy_id: str | None = None,
                   clock=now_rfc3339, ids: IdAllocator | None = None) -> Taxonomy:
    """Full STEP 1 run: intentions, then descriptions per intention, then
    example pairs per description. Output always passes validate_structure
    or an error is raised; nothing invalid escapes."""
    ids = ids or IdAllocator()
    partial: dict = {"domain": ctx.domain, "task": ctx.task, "intentions": []}
    nodes: dict[str, TaxonomyNode] = {}
    roots: list[str] = []
    try:
        intentions = generate_level(ctx, Level.INTENTION, provider, model)
        intention_ids = [ids.next() for _ in intentions]
        for (label, rationale), intention_id in zip(intentions, intention_ids):
            branch: dict = {"label": label, "descriptions": []}
            partial["intentions"].append(branch)
            ictx = ctx.child(Level.INTENTION, label)
            descriptions = generate_level(ictx, Level.DESCRIPTION, provider, model)
            description_ids = [ids.next() for _ in descriptions]
            for (text, d_rationale), description_id in zip(descriptions, description_ids):
                entry: dict = {"description": text, "examples": []}
                branch["descriptions"].append(entry)
                dctx = ictx.child(Level.DESCRIPTION, text)
                examples = generate_level(dctx, Level.EXAMPLE, provider, model)
                example_ids = []
                for line, e_rationale in examples:
                    original, revised = split_example(line)
                    entry["examples"].append({"original": original, "revised": revised})
                    example_id = ids.next()
                    example_ids.append(example_id)
                    nodes[example_id] = make_example(example_id, original, revised, e_rationale)
                nodes[description_id] = make_description(
                    description_id, text, d_rationale, children=tuple(example_ids))
            nodes[intention_id] = make_intention(
                intention_id, label, rationale, children=tuple(description_ids))
            roots.append(intention_id)
    except GenerationError as exc:
        exc.partial = partial
        raise

    tax = Taxonomy(taxonomy_id=taxonomy_id or _slug(f"{ctx.domain}-{ctx.task}"),
                   domain=ctx.domain, task=ctx.task, version=1, parent_version=None,
                   created_at=clock(), roots=tuple(roots), nodes=nodes)
    report = validate_structure(tax)
    if not report.ok:
        error = AbortedPartial(f"generated taxonomy failed validation: {report.summary()}")
        error.partial = partial
        raise error
    return tax
