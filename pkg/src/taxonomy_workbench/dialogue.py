"""Aspect-driven review dialogue: an Interviewer asks a fixed bank of
questions, the expert answers, and a Creator role turns each answer into
either a no-change verdict or a new validated taxonomy version.

The Creator speaks a full-document protocol: it replies with the single
line NO_CHANGE, or with a complete taxonomy document fenced between
BEGIN_TAXONOMY / END_TAXONOMY lines followed by a rationale paragraph
(and optionally a final FOLLOW_UP line to have the same aspect re-asked).
Full documents are trivially validated; patch formats are not.
"""

from __future__ import annotations

import enum
import threading
import uuid
from dataclasses import dataclass, field, replace

from .errors import (
    CreatorParseError,
    InvalidInput,
    InvalidTaxonomy,
    PendingAspects,
    SessionComplete,
    SessionFinalized,
)
from .gateway import ChatMessage, ChatRequest, Provider, Role
from .serialization import deserialize, serialize
from .taxonomy import (
    Provenance,
    ProvenanceKind,
    Taxonomy,
    now_rfc3339,
    validate_structure,
)


class AspectName(enum.Enum):
    CONSISTENCY = "consistency"
    CLARITY = "clarity"
    PRACTICALITY = "practicality"
    COMPREHENSIVENESS = "comprehensiveness"


@dataclass(frozen=True)
class Aspect:
    name: AspectName
    canonical_question: str


#: the fixed question bank, asked in this order.
ASPECTS = (
    Aspect(AspectName.CONSISTENCY,
           "Do all descriptions for label not overlap in the meaning? "
           "If not, which description seems ambiguous/duplicate?"),
    Aspect(AspectName.CLARITY,
           "Do the descriptions provide clear understanding? "
           "If not, which one is unclear and how should it be improved?"),
    Aspect(AspectName.PRACTICALITY,
           "Is there any description that is not typically considered in your domain? "
           "Which one?"),
    Aspect(AspectName.COMPREHENSIVENESS,
           "What do you think can be added as an additional description category "
           "if not comprehensive?"),
)

NO_CHANGE_SENTINEL = "NO_CHANGE"
DOC_FENCE_OPEN = "BEGIN_TAXONOMY"
DOC_FENCE_CLOSE = "END_TAXONOMY"
FOLLOW_UP_MARKER = "FOLLOW_UP"

#: an aspect is asked at most twice: the initial round plus one follow-up.
MAX_ASKS_PER_ASPECT = 2


class Speaker(enum.Enum):
    INTERVIEWER = "interviewer"
    EXPERT = "expert"
    CREATOR = "creator"


class SessionState(enum.Enum):
    AWAITING_EXPERT = "awaiting_expert"
    AWAITING_CREATOR = "awaiting_creator"
    # extension: queue exhausted but finalize not yet called; the three-state
    # core cannot distinguish "mid-run" from "done, awaiting sign-off".
    COMPLETE = "complete"
    FINALIZED = "finalized"


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str
    timestamp: str
    version_after: int | None = None


@dataclass(frozen=True)
class CreatorOutcome:
    revised: Taxonomy | None
    change_rationale: str
    no_change: bool


@dataclass
class DialogueSession:
    session_id: str
    expert_id: str
    taxonomy_id: str
    starting_version: int
    current_taxonomy: Taxonomy
    aspect_queue: list[Aspect]
    transcript: list[Turn] = field(default_factory=list)
    state: SessionState = SessionState.AWAITING_EXPERT
    asks_used: dict[str, int] = field(default_factory=dict)
    clock: object = now_rfc3339
    on_commit: object = None  # callable(Taxonomy) -> None
    preamble: bool = False
    model: str = "scripted"
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def current_version(self) -> int:
        return self.current_taxonomy.version

    def _append(self, speaker: Speaker, text: str, version_after: int | None = None):
        self.transcript.append(Turn(speaker=speaker, text=text,
                                    timestamp=self.clock(),
                                    version_after=version_after))


def _ask(session: DialogueSession, aspect: Aspect,
         provider: Provider | None, model: str, preamble: bool) -> None:
    question = aspect.canonical_question
    if preamble and provider is not None:
        request = ChatRequest(
            model=model, request_tag="step2.interviewer",
            messages=(ChatMessage(Role.USER,
                                  "You are interviewing a domain expert about a taxonomy "
                                  f"of revision intentions. The next topic is {aspect.name.value}. "
                                  "Write one short sentence introducing the question below, "
                                  "and nothing else.\n\n" + question),))
        intro = provider.complete(request).content.strip()
        if intro:
            question = intro + "\n\n" + question
    session._append(Speaker.INTERVIEWER, question)
    session.asks_used[aspect.name.value] = session.asks_used.get(aspect.name.value, 0) + 1
    session.state = SessionState.AWAITING_EXPERT


def start_session(tax: Taxonomy, expert_id: str, provider: Provider | None = None,
                  model: str = "scripted", session_id: str | None = None,
                  clock=now_rfc3339, preamble: bool = False,
                  on_commit=None) -> DialogueSession:
    report = validate_structure(tax)
    if not report.ok:
        raise InvalidTaxonomy(f"cannot review an invalid taxonomy: {report.summary()}",
                              violations=list(report.violations))
    session = DialogueSession(
        session_id=session_id or uuid.uuid4().hex[:12],
        expert_id=expert_id,
        taxonomy_id=tax.taxonomy_id,
        starting_version=tax.version,
        current_taxonomy=tax,
        aspect_queue=list(ASPECTS),
        clock=clock,
        on_commit=on_commit,
        preamble=preamble,
        model=model)
    _ask(session, session.aspect_queue[0], provider, model, preamble)
    return session


def next_question(session: DialogueSession) -> str:
    if session.state is SessionState.FINALIZED:
        raise SessionFinalized("session is finalized")
    if session.state is SessionState.COMPLETE:
        raise SessionComplete("all aspects answered; finalize the session")
    for turn in reversed(session.transcript):
        if turn.speaker is Speaker.INTERVIEWER:
            return turn.text
    raise SessionComplete("no pending question")


def _creator_request(session: DialogueSession, aspect: Aspect, reply: str,
                     model: str) -> ChatRequest:
    doc = serialize(session.current_taxonomy).decode("utf-8")
    text = (
        f"You maintain a taxonomy of revision intentions for {session.current_taxonomy.domain} "
        f"{session.current_taxonomy.task} writing. The current version is below, in the "
        "workbench taxonomy file format:\n\n"
        f"{DOC_FENCE_OPEN}\n{doc}{DOC_FENCE_CLOSE}\n\n"
        f"An expert was asked about {aspect.name.value}: "
        f"\"{aspect.canonical_question}\"\n"
        f"The expert replied:\n{reply}\n\n"
        "If this feedback needs no change to the taxonomy, reply with the single line:\n"
        f"{NO_CHANGE_SENTINEL}\n"
        "Otherwise reply with the complete revised taxonomy between "
        f"{DOC_FENCE_OPEN} and {DOC_FENCE_CLOSE} lines, followed by one paragraph "
        "explaining the change. Keep node ids stable for unchanged nodes; new nodes may "
        "use any unused id. If the same question should be re-asked after this change, "
        f"add a final line:\n{FOLLOW_UP_MARKER}")
    return ChatRequest(model=model, request_tag="step2.creator",
                       messages=(ChatMessage(Role.USER, text),))


@dataclass(frozen=True)
class _ParsedCreator:
    no_change: bool
    doc_text: str | None
    rationale: str
    follow_up: bool


def parse_creator_reply(raw: str) -> _ParsedCreator:
    lines = raw.splitlines()
    stripped = [line.strip() for line in lines]
    follow_up = FOLLOW_UP_MARKER in stripped
    if NO_CHANGE_SENTINEL in stripped:
        return _ParsedCreator(True, None, "", follow_up)
    if DOC_FENCE_OPEN not in stripped:
        raise CreatorParseError(
            f"creator reply has neither {NO_CHANGE_SENTINEL} nor a {DOC_FENCE_OPEN} fence")
    open_index = stripped.index(DOC_FENCE_OPEN)
    try:
        close_index = stripped.index(DOC_FENCE_CLOSE, open_index + 1)
    except ValueError:
        raise CreatorParseError(f"{DOC_FENCE_OPEN} fence never closed") from None
    doc_text = "\n".join(lines[open_index + 1:close_index])
    tail = [line for line in stripped[close_index + 1:]
            if line and line != FOLLOW_UP_MARKER]
    rationale = " ".join(tail).strip()
    if not rationale:
        raise CreatorParseError("revision lacks a change rationale paragraph")
    return _ParsedCreator(False, doc_text, rationale, follow_up)


def _adopt_revision(session: DialogueSession, doc_text: str, aspect: Aspect) -> Taxonomy:
    """Parse, re-stamp, and validate a Creator document; commit nothing on error."""
    try:
        draft = deserialize(doc_text)
    except Exception as exc:
        raise CreatorParseError(f"revision document malformed: {exc}") from None

    current = session.current_taxonomy
    nodes = {}
    for node_id, node in draft.nodes.items():
        old = current.nodes.get(node_id)
        # children moves don't make a node "edited"; payload/rationale do
        if old is not None and replace(old, provenance=node.provenance,
                                       children=node.children) == node:
            nodes[node_id] = replace(old, children=node.children)
        else:
            nodes[node_id] = replace(
                node, provenance=Provenance(ProvenanceKind.EXPERT_REVISION,
                                            note=f"aspect: {aspect.name.value}"))
    revised = Taxonomy(
        taxonomy_id=current.taxonomy_id, domain=current.domain, task=current.task,
        version=current.version + 1, parent_version=current.version,
        created_at=session.clock(), roots=draft.roots, nodes=nodes)
    report = validate_structure(revised)
    if not report.ok:
        raise CreatorParseError(f"revision failed validation: {report.summary()}")
    return revised


def submit_expert_reply(session: DialogueSession, reply: str, provider: Provider,
                        model: str | None = None) -> tuple[DialogueSession, CreatorOutcome]:
    if session.state is SessionState.FINALIZED:
        raise SessionFinalized("session is finalized")
    if session.state is SessionState.COMPLETE:
        raise SessionComplete("all aspects answered; finalize the session")
    if not reply.strip():
        raise InvalidInput("expert reply must be nonempty")
    model = model or session.model

    with session._lock:
        aspect = session.aspect_queue[0]
        session._append(Speaker.EXPERT, reply)
        session.state = SessionState.AWAITING_CREATOR
        try:
            response = provider.complete(_creator_request(session, aspect, reply, model))
            parsed = parse_creator_reply(response.content)
            if parsed.no_change:
                outcome = CreatorOutcome(revised=None, change_rationale="", no_change=True)
                session._append(Speaker.CREATOR, NO_CHANGE_SENTINEL)
            else:
                revised = _adopt_revision(session, parsed.doc_text, aspect)
                session.current_taxonomy = revised
                if session.on_commit is not None:
                    session.on_commit(revised)
                outcome = CreatorOutcome(revised=revised,
                                         change_rationale=parsed.rationale,
                                         no_change=False)
                session._append(Speaker.CREATOR, parsed.rationale,
                                version_after=revised.version)
        except Exception:
            session.state = SessionState.AWAITING_EXPERT  # expert may retry
            raise

        ask_again = (not parsed.no_change and parsed.follow_up
                     and session.asks_used.get(aspect.name.value, 0) < MAX_ASKS_PER_ASPECT)
        if not ask_again:
            session.aspect_queue.pop(0)
        if session.aspect_queue:
            _ask(session, session.aspect_queue[0], provider, model, session.preamble)
        else:
            session.state = SessionState.COMPLETE
    return session, outcome


def finalize_session(session: DialogueSession, force: bool = False) -> Taxonomy:
    if session.state is SessionState.FINALIZED:
        raise SessionFinalized("session already finalized")
    if session.aspect_queue and not force:
        pending = ", ".join(a.name.value for a in session.aspect_queue)
        raise PendingAspects(f"aspects still pending: {pending}")
    session.state = SessionState.FINALIZED
    return session.current_taxonomy


# ---------------------------------------------------------------------------
# Export / restore
# ---------------------------------------------------------------------------


def session_to_dict(session: DialogueSession) -> dict:
    return {
        "session_id": session.session_id,
        "expert_id": session.expert_id,
        "taxonomy_id": session.taxonomy_id,
        "turns": [{"speaker": t.speaker.value, "text": t.text,
                   "timestamp": t.timestamp, "version_after": t.version_after}
                  for t in session.transcript],
        "state": session.state.value,
    }


def restore_session(export: dict, internals: dict, current: Taxonomy,
                    clock=now_rfc3339, on_commit=None) -> DialogueSession:
    """Rebuild a live session from its export plus engine internals
    (queue, ask counters, starting version) persisted alongside it."""
    by_name = {a.name.value: a for a in ASPECTS}
    session = DialogueSession(
        session_id=export["session_id"],
        expert_id=export["expert_id"],
        taxonomy_id=export["taxonomy_id"],
        starting_version=internals["starting_version"],
        current_taxonomy=current,
        aspect_queue=[by_name[n] for n in internals["aspect_queue"]],
        transcript=[Turn(speaker=Speaker(t["speaker"]), text=t["text"],
                         timestamp=t["timestamp"], version_after=t["version_after"])
                    for t in export["turns"]],
        state=SessionState(export["state"]),
        asks_used=dict(internals.get("asks_used", {})),
        clock=clock,
        on_commit=on_commit,
        preamble=internals.get("preamble", False),
        model=internals.get("model", "scripted"))
    return session


def session_internals(session: DialogueSession) -> dict:
    return {
        "starting_version": session.starting_version,
        "aspect_queue": [a.name.value for a in session.aspect_queue],
        "asks_used": dict(session.asks_used),
        "preamble": session.preamble,
        "model": session.model,
    }
