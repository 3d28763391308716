"""Annotation records and inter-coder reliability statistics.

Cohen's kappa covers coder pairs, Fleiss' kappa pools everyone. Both carry a
degenerate flag for the chance-agreement-is-certain corner (every rating in
one category) where the usual formula divides by zero.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass

from .errors import (
    EmptyInput,
    FewerThanTwoCoders,
    InvalidInput,
    InvalidTaxonomy,
    LengthMismatch,
    RaggedRows,
    UnknownLabel,
)
from .gateway import ChatMessage, ChatRequest, Provider, Role
from .taxonomy import Taxonomy, normalize_label, validate_structure

Label = str


class CoderKind(enum.Enum):
    HUMAN = "human"
    LLM = "llm"


@dataclass(frozen=True)
class AnnotationRecord:
    coder_id: str
    coder_kind: CoderKind
    template_id: str
    unit_index: int
    label: Label
    note: str | None = None


# ---------------------------------------------------------------------------
# Kappa statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    p_o: float
    p_e: float
    degenerate: bool = False


def cohen_kappa(a: list[Label], b: list[Label]) -> KappaResult:
    if len(a) != len(b):
        raise LengthMismatch(f"label vectors differ: {len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("no units to compare")
    n = len(a)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    count_a, count_b = Counter(a), Counter(b)
    p_e = sum((count_a[c] / n) * (count_b[c] / n)
              for c in sorted(set(a) | set(b)))
    if p_e == 1.0:
        return KappaResult(kappa=1.0 if p_o == 1.0 else 0.0, p_o=p_o, p_e=p_e,
                           degenerate=True)
    return KappaResult(kappa=(p_o - p_e) / (1.0 - p_e), p_o=p_o, p_e=p_e)


@dataclass(frozen=True)
class FleissResult:
    kappa: float
    p_bar: float
    p_e_bar: float
    degenerate: bool = False

    def __float__(self) -> float:
        return self.kappa


def fleiss_kappa(counts: list[list[int]]) -> FleissResult:
    if not counts:
        raise EmptyInput("no unit rows")
    if len({len(row) for row in counts}) != 1:
        raise RaggedRows("rows cover different category sets")
    row_sums = {sum(row) for row in counts}
    if len(row_sums) != 1:
        raise RaggedRows(f"unit rows sum to different coder counts: {sorted(row_sums)}")
    n = row_sums.pop()
    if n < 2:
        raise FewerThanTwoCoders(f"{n} rating(s) per unit")

    n_units = len(counts)
    p_bar = sum((sum(c * c for c in row) - n) / (n * (n - 1))
                for row in counts) / n_units
    total = n_units * n
    p_e_bar = sum((sum(col) / total) ** 2 for col in zip(*counts))
    if p_e_bar == 1.0:
        return FleissResult(kappa=1.0 if p_bar == 1.0 else 0.0,
                            p_bar=p_bar, p_e_bar=p_e_bar, degenerate=True)
    return FleissResult(kappa=(p_bar - p_e_bar) / (1.0 - p_e_bar),
                        p_bar=p_bar, p_e_bar=p_e_bar)


# ---------------------------------------------------------------------------
# Multi-coder agreement report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairAgreement:
    coder_a: str
    coder_b: str
    pair_kind: str            # "human-human" | "human-llm" | "llm-llm"
    kappa: float
    p_o: float
    p_e: float
    n_units: int
    degenerate: bool


@dataclass(frozen=True)
class PooledAgreement:
    fleiss_kappa: float
    n_units: int
    n_coders: int
    n_categories: int
    degenerate: bool


@dataclass
class AgreementReport:
    coder_ids: list[str]
    pairwise: list[PairAgreement]
    pooled: PooledAgreement
    dropped_units: int = 0

    def pair(self, a: str, b: str) -> PairAgreement:
        for entry in self.pairwise:
            if {entry.coder_a, entry.coder_b} == {a, b}:
                return entry
        raise KeyError(f"no pair ({a}, {b})")


def _pair_kind(kind_a: CoderKind, kind_b: CoderKind) -> str:
    return "-".join(sorted([kind_a.value, kind_b.value]))


def agreement_report(records: list[AnnotationRecord]) -> AgreementReport:
    by_coder: dict[str, dict[int, Label]] = {}
    kinds: dict[str, CoderKind] = {}
    for record in records:
        labels = by_coder.setdefault(record.coder_id, {})
        if record.unit_index in labels:
            raise InvalidInput(
                f"coder {record.coder_id!r} labeled unit {record.unit_index} twice")
        labels[record.unit_index] = record.label
        if kinds.setdefault(record.coder_id, record.coder_kind) is not record.coder_kind:
            raise InvalidInput(f"coder {record.coder_id!r} has two coder kinds")

    coder_ids = sorted(by_coder)
    if len(coder_ids) < 2:
        raise FewerThanTwoCoders(f"{len(coder_ids)} coder(s) in records")

    unit_sets = [set(by_coder[c]) for c in coder_ids]
    complete = sorted(set.intersection(*unit_sets))
    dropped = len(set.union(*unit_sets)) - len(complete)
    if not complete:
        raise EmptyInput("no unit was labeled by every coder")

    vectors = {c: [by_coder[c][u] for u in complete] for c in coder_ids}
    pairwise = []
    for a, b in itertools.combinations(coder_ids, 2):
        result = cohen_kappa(vectors[a], vectors[b])
        pairwise.append(PairAgreement(
            coder_a=a, coder_b=b, pair_kind=_pair_kind(kinds[a], kinds[b]),
            kappa=result.kappa, p_o=result.p_o, p_e=result.p_e,
            n_units=len(complete), degenerate=result.degenerate))

    categories = sorted({label for v in vectors.values() for label in v})
    counts = [[sum(vectors[c][i] == cat for c in coder_ids) for cat in categories]
              for i in range(len(complete))]
    pooled_result = fleiss_kappa(counts)
    pooled = PooledAgreement(
        fleiss_kappa=pooled_result.kappa, n_units=len(complete),
        n_coders=len(coder_ids), n_categories=len(categories),
        degenerate=pooled_result.degenerate)
    return AgreementReport(coder_ids=coder_ids, pairwise=pairwise, pooled=pooled,
                           dropped_units=dropped)


# ---------------------------------------------------------------------------
# LLM annotation
# ---------------------------------------------------------------------------


def unit_text(unit) -> str:
    if isinstance(unit, str):
        return unit
    # EditSpan duck-typed to avoid a hard dependency direction
    return f"{unit.kind.value}: {' '.join(unit.tokens)}"


def _annotation_prompt(tax: Taxonomy, unit) -> str:
    lines = [
        "You are labeling one edit from a writing template with the single "
        "revision intention it expresses.",
        f"Domain: {tax.domain}. Task: {tax.task}.",
        "Intention labels:",
    ]
    lines += [f"- {root.label}" for root in tax.root_nodes()]
    lines += [
        "Edit under review:",
        unit_text(unit),
        "Reply with exactly one label from the list and nothing else.",
    ]
    return "\n".join(lines)


def llm_annotate(template_id: str, units: list, tax: Taxonomy,
                 provider: Provider, *, coder_id: str = "llm",
                 model: str = "scripted") -> list[AnnotationRecord]:
    if not units:
        raise EmptyInput("no units to annotate")
    report = validate_structure(tax)
    if not report.ok:
        raise InvalidTaxonomy(report.violations)
    canonical = {normalize_label(root.label or ""): root.label or ""
                 for root in tax.root_nodes()}

    records = []
    for index, unit in enumerate(units):
        prompt = _annotation_prompt(tax, unit)
        request = ChatRequest(model=model, request_tag="step3.annotate",
                              messages=(ChatMessage(Role.USER, prompt),))
        content = provider.complete(request).content.strip()
        key = normalize_label(content)
        if key not in canonical:
            retry = ChatRequest(model=model, request_tag="step3.annotate",
                                messages=(
                                    ChatMessage(Role.USER, prompt),
                                    ChatMessage(Role.ASSISTANT, content),
                                    ChatMessage(Role.USER,
                                                f"{content!r} is not one of the listed "
                                                "labels. Reply with exactly one label "
                                                "from the list, verbatim."),
                                ))
            content = provider.complete(retry).content.strip()
            key = normalize_label(content)
            if key not in canonical:
                raise UnknownLabel(
                    f"unit {index}: {content!r} is not an intention label")
        records.append(AnnotationRecord(
            coder_id=coder_id, coder_kind=CoderKind.LLM, template_id=template_id,
            unit_index=index, label=canonical[key]))
    return records


def resolve_label(tax: Taxonomy, label: str) -> str:
    """Canonical root label for ``label``, via normalization. UnknownLabel if absent."""
    canonical = {normalize_label(root.label or ""): root.label or ""
                 for root in tax.root_nodes()}
    key = normalize_label(label)
    if key not in canonical:
        raise UnknownLabel(f"{label!r} is not an intention label")
    return canonical[key]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def record_to_dict(record: AnnotationRecord) -> dict:
    return {"coder_id": record.coder_id, "coder_kind": record.coder_kind.value,
            "template_id": record.template_id, "unit_index": record.unit_index,
            "label": record.label, "note": record.note}


def record_from_dict(data: dict) -> AnnotationRecord:
    try:
        return AnnotationRecord(
            coder_id=data["coder_id"], coder_kind=CoderKind(data["coder_kind"]),
            template_id=data["template_id"], unit_index=int(data["unit_index"]),
            label=data["label"], note=data.get("note"))
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInput(f"bad annotation record: {exc}") from exc


def agreement_report_to_dict(report: AgreementReport) -> dict:
    return {
        "coder_ids": list(report.coder_ids),
        "pairwise": [{"coder_a": p.coder_a, "coder_b": p.coder_b,
                      "pair_kind": p.pair_kind, "kappa": p.kappa, "p_o": p.p_o,
                      "p_e": p.p_e, "n_units": p.n_units,
                      "degenerate": p.degenerate}
                     for p in report.pairwise],
        "pooled": {"fleiss_kappa": report.pooled.fleiss_kappa,
                   "n_units": report.pooled.n_units,
                   "n_coders": report.pooled.n_coders,
                   "n_categories": report.pooled.n_categories,
                   "degenerate": report.pooled.degenerate},
        "dropped_units": report.dropped_units,
    }


def render_agreement_table(report: AgreementReport) -> str:
    lines = [f"coders: {', '.join(report.coder_ids)}",
             f"units compared: {report.pooled.n_units} "
             f"(dropped {report.dropped_units})",
             "pair                          kind         kappa    p_o      p_e"]
    for p in report.pairwise:
        pair = f"{p.coder_a} / {p.coder_b}"
        flag = " (degenerate)" if p.degenerate else ""
        lines.append(f"{pair:<29} {p.pair_kind:<12} "
                     f"{p.kappa:<8.3f} {p.p_o:<8.3f} {p.p_e:<8.3f}{flag}")
    flag = " (degenerate)" if report.pooled.degenerate else ""
    lines.append(f"fleiss kappa: {report.pooled.fleiss_kappa:.3f} over "
                 f"{report.pooled.n_coders} coders, "
                 f"{report.pooled.n_categories} categories{flag}")
    return "\n".join(lines) + "\n"
