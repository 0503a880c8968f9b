"""RDF-style terms: IRIs, typed literals and triples.

The data layer never uses blank nodes; every node is IRI-identified so any
node can be referenced by later statements. Terms are immutable and hashable
so triples can live in sets and dict keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Optional, Union

from .errors import ValidationError

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_STRING = XSD + "string"
XSD_DECIMAL = XSD + "decimal"
XSD_INTEGER = XSD + "integer"
XSD_DOUBLE = XSD + "double"
XSD_FLOAT = XSD + "float"
XSD_BOOLEAN = XSD + "boolean"
XSD_DATETIME = XSD + "dateTime"
XSD_GYEAR = XSD + "gYear"
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDF_TYPE = RDF_NS + "type"
RDF_LANG_STRING = RDF_NS + "langString"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
RDFS_LABEL = RDFS_NS + "label"

NUMERIC_DATATYPES = frozenset({XSD_DECIMAL, XSD_INTEGER, XSD_DOUBLE, XSD_FLOAT})

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
# Characters never allowed in an IRI reference (plus all ASCII controls).
_BAD_IRI_CHARS = set(' <>"{}|^`\\')
_LANG_RE = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")


@dataclass(frozen=True, order=True)
class Iri:
    """An absolute IRI, compared by exact string equality."""

    value: str

    def __post_init__(self):
        v = self.value
        if not v or not _SCHEME_RE.match(v):
            raise ValidationError(f"not an absolute IRI: {v!r}")
        for ch in v:
            if ch in _BAD_IRI_CHARS or ord(ch) < 0x20 or ord(ch) == 0x7F:
                raise ValidationError(f"illegal character {ch!r} in IRI: {v!r}")

    def local_name(self) -> str:
        """Tail after the last '#' or '/', used as a last-resort display label."""
        v = self.value
        for sep in ("#", "/"):
            if sep in v:
                tail = v.rsplit(sep, 1)[1]
                if tail:
                    return tail
        return v

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Literal:
    """A typed literal; language tags only together with rdf:langString."""

    lexical: str
    datatype: Iri
    language: Optional[str] = None

    def __post_init__(self):
        if self.language is not None:
            if self.datatype.value != RDF_LANG_STRING:
                raise ValidationError(
                    "language tag requires the language-string datatype"
                )
            if not _LANG_RE.match(self.language):
                raise ValidationError(f"malformed language tag: {self.language!r}")
        elif self.datatype.value == RDF_LANG_STRING:
            raise ValidationError("language-string literal requires a language tag")
        if self.datatype.value in NUMERIC_DATATYPES:
            try:
                Decimal(self.lexical)
            except InvalidOperation:
                raise ValidationError(
                    f"lexical form {self.lexical!r} is not a decimal number"
                ) from None

    def __str__(self) -> str:
        return self.lexical


Term = Union[Iri, Literal]


def string_literal(text: str) -> Literal:
    return Literal(text, Iri(XSD_STRING))


def decimal_literal(value) -> Literal:
    return Literal(str(value), Iri(XSD_DECIMAL))


def integer_literal(value: int) -> Literal:
    return Literal(str(int(value)), Iri(XSD_INTEGER))


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def sort_key(self):
        return (self.subject.value, self.predicate.value, object_sort_key(self.object))


def object_sort_key(term: Term):
    if isinstance(term, Iri):
        return (0, term.value, "", "")
    return (1, term.lexical, term.datatype.value, term.language or "")


def term_to_json(term: Term) -> dict:
    """Wire/log encoding of a term; inverse of term_from_json."""
    if isinstance(term, Iri):
        return {"type": "iri", "value": term.value}
    out = {"type": "literal", "value": term.lexical, "datatype": term.datatype.value}
    if term.language is not None:
        out["language"] = term.language
    return out


def term_from_json(data: dict) -> Term:
    if not isinstance(data, dict) or "type" not in data:
        raise ValidationError(f"malformed term encoding: {data!r}")
    if data["type"] == "iri":
        return Iri(data["value"])
    if data["type"] == "literal":
        return Literal(
            data["value"], Iri(data.get("datatype", XSD_STRING)), data.get("language")
        )
    raise ValidationError(f"unknown term kind: {data['type']!r}")
