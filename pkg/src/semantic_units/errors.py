"""Error taxonomy shared by the engine, the serializers and the HTTP layer.

Every error carries a stable machine-readable ``code`` so the API can map
exceptions to structured error bodies without string matching.
"""

from __future__ import annotations


class SemanticUnitsError(Exception):
    """Base class for all engine errors."""

    code = "error"
    http_status = 400

    def __init__(self, message: str, details: object = None):
        super().__init__(message)
        self.message = message
        self.details = details


class PartitionViolation(SemanticUnitsError):
    code = "partition-violation"
    http_status = 409


class UnknownOwner(SemanticUnitsError):
    code = "unknown-owner"
    http_status = 404


class UnknownUnit(SemanticUnitsError):
    code = "unknown-unit"
    http_status = 404


class UnknownVersion(SemanticUnitsError):
    code = "unknown-version"
    http_status = 404


class UnknownEntry(SemanticUnitsError):
    code = "unknown-entry"
    http_status = 404


class BindingError(SemanticUnitsError):
    """Raised when slot bindings fail validation; details maps slot -> reason."""

    code = "binding-error"
    http_status = 422


class ParseError(SemanticUnitsError):
    """Syntax error in a text artifact; carries line and column."""

    code = "parse-error"
    http_status = 422

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(SemanticUnitsError):
    code = "validation-error"
    http_status = 422


class NotStatementUnit(SemanticUnitsError):
    code = "not-statement-unit"
    http_status = 422


class InactiveUnit(SemanticUnitsError):
    code = "inactive-unit"
    http_status = 409


class NoStatements(SemanticUnitsError):
    code = "no-statements"
    http_status = 422


class TooFew(SemanticUnitsError):
    code = "too-few"
    http_status = 422


class NotLinked(SemanticUnitsError):
    code = "not-linked"
    http_status = 422


class Empty(SemanticUnitsError):
    code = "empty"
    http_status = 422


class UnknownMember(SemanticUnitsError):
    code = "unknown-member"
    http_status = 404


class NotPartialOrder(SemanticUnitsError):
    code = "not-partial-order"
    http_status = 422


class CycleDetected(SemanticUnitsError):
    """Collected (not raised) when a relation component contains a cycle."""

    code = "cycle-detected"
    http_status = 422

    def __init__(self, message: str, nodes: tuple = ()):
        super().__init__(message, details=list(nodes))
        self.nodes = tuple(nodes)


class MultiParent(SemanticUnitsError):
    """Collected (not raised) when a node in a relation component has two parents."""

    code = "multi-parent"
    http_status = 422

    def __init__(self, message: str, nodes: tuple = ()):
        super().__init__(message, details=list(nodes))
        self.nodes = tuple(nodes)


class MissingItem(SemanticUnitsError):
    code = "missing-item"
    http_status = 422


class MissingTemplate(SemanticUnitsError):
    code = "missing-template"
    http_status = 422


class DuplicateEntry(SemanticUnitsError):
    code = "duplicate-entry"
    http_status = 409


class UnknownParent(SemanticUnitsError):
    code = "unknown-parent"
    http_status = 404


class UnknownBearer(SemanticUnitsError):
    code = "unknown-bearer"
    http_status = 404


class UnresolvedTerm(SemanticUnitsError):
    code = "unresolved-term"
    http_status = 422


class NotEnabled(SemanticUnitsError):
    code = "not-enabled"
    http_status = 422


class RangeError(SemanticUnitsError):
    code = "range-error"
    http_status = 422


class NotFound(SemanticUnitsError):
    code = "not-found"
    http_status = 404


class ProviderUnavailable(SemanticUnitsError):
    code = "provider-unavailable"
    http_status = 503
