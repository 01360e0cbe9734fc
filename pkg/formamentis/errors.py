"""Exception hierarchy for the forma mentis toolkit.

Every error carries a stable ``code`` and serializes to a flat dict so the
command-line front end can emit a machine-readable error report.
"""

from __future__ import annotations

from typing import Any, Dict


class FormaMentisError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, **self.details}


class ValidationError(FormaMentisError):
    """Input, data or configuration problem. Maps to exit status 2."""

    code = "validation_error"


# ---------------------------
# Configuration / files
# ---------------------------

class ConfigError(ValidationError):
    code = "config_error"


class InputNotFound(ValidationError):
    code = "input_not_found"

    def __init__(self, path: str):
        super().__init__(f"Input not found: {path}", path=path)


class UnreadableInput(ValidationError):
    code = "unreadable_input"

    def __init__(self, path: str, reason: str):
        super().__init__(f"Cannot read {path}: {reason}", path=path, reason=reason)


# ---------------------------
# Ingest
# ---------------------------

class MissingColumn(ValidationError):
    code = "missing_column"

    def __init__(self, name: str):
        super().__init__(f"Missing column: {name}", column=name)


class BadRating(ValidationError):
    code = "bad_rating"

    def __init__(self, row: int, value: Any, reason: str = "rating must be an integer in [1, 5]"):
        super().__init__(f"Row {row}: bad rating {value!r} ({reason})", row=row, value=str(value))


class BadPosition(ValidationError):
    code = "bad_position"

    def __init__(self, row: int, value: Any):
        super().__init__(f"Row {row}: association position must be 1, 2 or 3, got {value!r}", row=row, value=str(value))


class BadGroup(ValidationError):
    code = "bad_group"

    def __init__(self, row: int, value: Any, field: str = "group"):
        super().__init__(f"Row {row}: unknown {field} {value!r}", row=row, value=str(value), field=field)


class DuplicateCue(ValidationError):
    code = "duplicate_cue"

    def __init__(self, participant: str, cue: str, position: Any = None):
        where = f" position {position}" if position is not None else ""
        super().__init__(
            f"Participant {participant!r} answers cue {cue!r}{where} more than once",
            participant=participant,
            cue=cue,
        )


class MalformedLine(ValidationError):
    code = "malformed_line"

    def __init__(self, lineno: int, reason: str):
        super().__init__(f"Line {lineno}: {reason}", lineno=lineno, reason=reason)


class WrongFieldCount(ValidationError):
    code = "wrong_field_count"

    def __init__(self, lineno: int, found: int, expected: int = 8):
        super().__init__(
            f"Line {lineno}: expected {expected} '='-separated fields, found {found}",
            lineno=lineno,
            found=found,
        )


class UnknownCue(ValidationError):
    code = "unknown_cue"

    def __init__(self, word: str, lineno: Any = None):
        super().__init__(f"Unknown cue: {word!r}", word=word, lineno=lineno)


# ---------------------------
# Normalize / valence / network
# ---------------------------

class InvalidLemmaMap(ValidationError):
    code = "invalid_lemma_map"


class EmptyCohort(ValidationError):
    code = "empty_cohort"


class EmptyGroup(ValidationError):
    code = "empty_group"


class MissingLabel(ValidationError):
    code = "missing_label"

    def __init__(self, word: str):
        super().__init__(f"No valence label for word {word!r}", word=word)


class NotACue(ValidationError):
    code = "not_a_cue"

    def __init__(self, word: str):
        super().__init__(f"{word!r} is not a cue node of this network", word=word)


# ---------------------------
# Metrics / null models
# ---------------------------

class NodeNotFound(ValidationError):
    code = "node_not_found"

    def __init__(self, node: Any):
        super().__init__(f"Node {node!r} not in graph", node=str(node))


class EmptyGraph(ValidationError):
    code = "empty_graph"


class PartialPartition(ValidationError):
    code = "partial_partition"


class NoEdges(ValidationError):
    code = "no_edges"


class TooFewEdges(ValidationError):
    code = "too_few_edges"


class MetricMismatch(ValidationError):
    code = "metric_mismatch"


class NullReplicateError(FormaMentisError):
    """A metric failed on one null replicate."""

    code = "null_replicate_error"

    def __init__(self, replicate: int, cause: Exception):
        super().__init__(
            f"Metric failed on replicate {replicate}: {type(cause).__name__}: {cause}",
            replicate=replicate,
        )
        self.cause = cause
