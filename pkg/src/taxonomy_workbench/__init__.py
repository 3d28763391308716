"""Workbench for expert-validated writing-intention taxonomies.

Pipeline: hierarchical generation of a three-level taxonomy, dialogue-based
expert validation with mediating model roles, merging of finalized
taxonomies, and annotation agreement statistics over writing-template edits.
"""

from .taxonomy import (
    Level,
    Provenance,
    ProvenanceKind,
    ExamplePair,
    TaxonomyNode,
    Taxonomy,
    ValidationReport,
    normalize_label,
    validate_structure,
)
from .serialization import serialize, deserialize
from .diffs import TaxonomyDiff, apply_diff, diff_versions
from .generation import GenerationContext, build_taxonomy, format_tagged, parse_tagged
from .dialogue import (
    DialogueSession,
    finalize_session,
    next_question,
    start_session,
    submit_expert_reply,
)
from .merge import MergeReport, merge
from .editdiff import EditSpan, apply_edits, render_edit_markup, sentence_edit_diff
from .icr import AnnotationRecord, agreement_report, cohen_kappa, fleiss_kappa, llm_annotate
from .store import WorkbenchStore
from .config import WorkbenchConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "Level",
    "Provenance",
    "ProvenanceKind",
    "ExamplePair",
    "TaxonomyNode",
    "Taxonomy",
    "ValidationReport",
    "normalize_label",
    "validate_structure",
    "serialize",
    "deserialize",
    "TaxonomyDiff",
    "apply_diff",
    "diff_versions",
    "GenerationContext",
    "build_taxonomy",
    "format_tagged",
    "parse_tagged",
    "DialogueSession",
    "start_session",
    "next_question",
    "submit_expert_reply",
    "finalize_session",
    "MergeReport",
    "merge",
    "EditSpan",
    "sentence_edit_diff",
    "apply_edits",
    "render_edit_markup",
    "AnnotationRecord",
    "cohen_kappa",
    "fleiss_kappa",
    "agreement_report",
    "llm_annotate",
    "WorkbenchStore",
    "WorkbenchConfig",
    "load_config",
    "__version__",
]
