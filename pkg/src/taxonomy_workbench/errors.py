"""Exception types for the workbench.

Every domain failure raises a subclass of WorkbenchError so callers (CLI,
HTTP API) can map errors to exit codes / status codes in one place.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all workbench domain errors."""

    code = "workbench_error"


# --- taxonomy core ---------------------------------------------------------


class InvalidTaxonomy(WorkbenchError):
    code = "invalid_taxonomy"

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = violations or []


class MismatchedTaxonomy(WorkbenchError):
    code = "mismatched_taxonomy"


class ParseError(WorkbenchError):
    """Malformed input text (bad JSON, bad script file)."""

    code = "parse_error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class SchemaError(WorkbenchError):
    """Syntactically valid input with the wrong shape."""

    code = "schema_error"


# --- llm gateway ------------------------------------------------------------


class GatewayError(WorkbenchError):
    code = "gateway_error"


class ProviderError(GatewayError):
    code = "provider_error"

    def __init__(self, message: str, retryable: bool = False, status: int | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.status = status


class Timeout(GatewayError):
    code = "timeout"


class ExhaustedRetries(GatewayError):
    code = "exhausted_retries"


class MalformedResponse(GatewayError):
    code = "malformed_response"


# --- step 1 generation ------------------------------------------------------


class UnbalancedTags(WorkbenchError):
    code = "unbalanced_tags"


class GenerationError(WorkbenchError):
    """Base for level-generation failures.

    ``level`` and ``parent`` say where the failing call sat in the tree;
    ``partial`` (set by build_taxonomy) carries whatever was assembled
    before the failure, for diagnostics.
    """

    code = "generation_error"

    def __init__(self, message: str, level: str | None = None, parent: str | None = None):
        ctx = ""
        if level:
            ctx = f" [level={level}" + (f", parent={parent!r}" if parent else "") + "]"
        super().__init__(message + ctx)
        self.level = level
        self.parent = parent
        self.partial = None


class MissingParent(GenerationError):
    code = "missing_parent"


class TooFewItems(GenerationError):
    code = "too_few_items"


class DuplicateItems(GenerationError):
    code = "duplicate_items"


class MissingEndTag(GenerationError):
    code = "missing_end_tag"


class ExampleFormatError(GenerationError):
    """Example item did not split into an original/revised pair."""

    code = "example_format_error"


class AbortedPartial(GenerationError):
    """Assembly completed but the result failed structural validation."""

    code = "aborted_partial"


# --- step 2 validation dialogue ---------------------------------------------


class SessionFinalized(WorkbenchError):
    code = "session_finalized"


class SessionComplete(WorkbenchError):
    """All aspects answered; only finalize is still accepted."""

    code = "session_complete"


class CreatorParseError(WorkbenchError):
    code = "creator_parse_error"


class PendingAspects(WorkbenchError):
    code = "pending_aspects"


# --- step 3 merge ------------------------------------------------------------


class DomainMismatch(WorkbenchError):
    code = "domain_mismatch"


class InvalidInput(WorkbenchError):
    code = "invalid_input"


# --- annotation / ICR ---------------------------------------------------------


class InconsistentEdits(WorkbenchError):
    code = "inconsistent_edits"


class UnknownLabel(WorkbenchError):
    code = "unknown_label"


class LengthMismatch(WorkbenchError):
    code = "length_mismatch"


class EmptyInput(WorkbenchError):
    code = "empty_input"


class RaggedRows(WorkbenchError):
    code = "ragged_rows"


class FewerThanTwoCoders(WorkbenchError):
    code = "fewer_than_two_coders"


# --- store / api --------------------------------------------------------------


class VersionConflict(WorkbenchError):
    code = "version_conflict"


class IoError(WorkbenchError):
    code = "io_error"


class NotFound(WorkbenchError):
    code = "not_found"


class ActiveSessionExists(WorkbenchError):
    code = "active_session_exists"
