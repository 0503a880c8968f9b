"""Canonical quad serialization and lossless re-import.

The quad document is line-based N-Quads: graph label = owning statement unit
IRI, lines sorted by (graph, subject, predicate, object), string escaping per
the W3C grammar. Exports are a pure function of store content, which makes
byte-comparison a valid test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import ParseError
from .terms import (
    Iri,
    Literal,
    RDF_LANG_STRING,
    Term,
    Triple,
    XSD_STRING,
    object_sort_key,
)

HEADER_PREFIX = "# semantic-units quads"

_ECHAR = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}

_UNESCAPE = {
    "\\": "\\",
    '"': '"',
    "n": "\n",
    "r": "\r",
    "t": "\t",
    "b": "\b",
    "f": "\f",
    "'": "'",
}


def escape_string(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ECHAR:
            out.append(_ECHAR[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append("\\u%04X" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def unescape_string(text: str, lineno: int = 0, col: int = 0) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(text):
            raise ParseError("dangling escape", lineno, col + i)
        nxt = text[i + 1]
        if nxt in _UNESCAPE:
            out.append(_UNESCAPE[nxt])
            i += 2
        elif nxt == "u":
            hexpart = text[i + 2 : i + 6]
            if len(hexpart) != 4:
                raise ParseError("truncated \\u escape", lineno, col + i)
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise ParseError(f"bad \\u escape {hexpart!r}", lineno, col + i)
            i += 6
        elif nxt == "U":
            hexpart = text[i + 2 : i + 10]
            if len(hexpart) != 8:
                raise ParseError("truncated \\U escape", lineno, col + i)
            try:
                out.append(chr(int(hexpart, 16)))
            except ValueError:
                raise ParseError(f"bad \\U escape {hexpart!r}", lineno, col + i)
            i += 10
        else:
            raise ParseError(f"unknown escape \\{nxt}", lineno, col + i)
    return "".join(out)


def term_text(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    lex = escape_string(term.lexical)
    if term.language is not None:
        return f'"{lex}"@{term.language}'
    if term.datatype.value == XSD_STRING:
        return f'"{lex}"'
    return f'"{lex}"^^<{term.datatype.value}>'


def quad_line(triple: Triple, graph: Iri) -> str:
    return (
        f"<{triple.subject.value}> <{triple.predicate.value}> "
        f"{term_text(triple.object)} <{graph.value}> ."
    )


class _LineParser:
    def __init__(self, line: str, lineno: int):
        self.line = line
        self.lineno = lineno
        self.pos = 0

    def fail(self, msg: str):
        raise ParseError(msg, self.lineno, self.pos + 1)

    def skip_ws(self):
        while self.pos < len(self.line) and self.line[self.pos] in " \t":
            self.pos += 1

    def parse_iri(self) -> Iri:
        if self.pos >= len(self.line) or self.line[self.pos] != "<":
            self.fail("expected '<'")
        end = self.line.find(">", self.pos)
        if end < 0:
            self.fail("unterminated IRI")
        raw = self.line[self.pos + 1 : end]
        self.pos = end + 1
        try:
            return Iri(raw)
        except Exception as exc:
            self.fail(str(exc))

    def parse_term(self) -> Term:
        self.skip_ws()
        if self.pos >= len(self.line):
            self.fail("unexpected end of line")
        if self.line[self.pos] == "<":
            return self.parse_iri()
        if self.line[self.pos] != '"':
            self.fail("expected IRI or literal")
        i = self.pos + 1
        while i < len(self.line):
            if self.line[i] == "\\":
                i += 2
                continue
            if self.line[i] == '"':
                break
            i += 1
        else:
            self.fail("unterminated literal")
        lexical = unescape_string(self.line[self.pos + 1 : i], self.lineno, self.pos + 1)
        self.pos = i + 1
        if self.line.startswith("^^", self.pos):
            self.pos += 2
            dt = self.parse_iri()
            return Literal(lexical, dt)
        if self.pos < len(self.line) and self.line[self.pos] == "@":
            j = self.pos + 1
            while j < len(self.line) and (self.line[j].isalnum() or self.line[j] == "-"):
                j += 1
            tag = self.line[self.pos + 1 : j]
            if not tag:
                self.fail("empty language tag")
            self.pos = j
            return Literal(lexical, Iri(RDF_LANG_STRING), tag)
        return Literal(lexical, Iri(XSD_STRING))


def parse_quad_line(line: str, lineno: int) -> Tuple[Triple, Iri]:
    p = _LineParser(line, lineno)
    p.skip_ws()
    subject = p.parse_iri()
    p.skip_ws()
    predicate = p.parse_iri()
    obj = p.parse_term()
    p.skip_ws()
    graph = p.parse_iri()
    p.skip_ws()
    if not p.line.startswith(".", p.pos):
        p.fail("expected terminating '.'")
    p.pos += 1
    p.skip_ws()
    if p.pos != len(p.line):
        p.fail("trailing characters after '.'")
    return Triple(subject, predicate, obj), graph


def quad_sort_key(item: Tuple[Triple, Iri]):
    triple, graph = item
    return (
        graph.value,
        triple.subject.value,
        triple.predicate.value,
        object_sort_key(triple.object),
    )


def render_document(
    quads: Iterable[Tuple[Triple, Iri]],
    seed: int,
    timestamp: str,
    base: str,
    extra_header: Optional[List[str]] = None,
) -> str:
    lines = [
        HEADER_PREFIX,
        f"# base: {base}",
        f"# seed: {seed}",
        f"# exported: {timestamp}",
    ]
    if extra_header:
        lines.extend(f"# {entry}" for entry in extra_header)
    lines.extend(quad_line(t, g) for t, g in sorted(quads, key=quad_sort_key))
    return "\n".join(lines) + "\n"


def parse_document(text: str) -> Tuple[Dict[str, str], List[Tuple[Triple, Iri, int]]]:
    """Returns (header metadata, [(triple, graph, line number)])."""
    meta: Dict[str, str] = {}
    quads: List[Tuple[Triple, Iri, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, value = body.split(":", 1)
                if " " not in key:
                    meta[key.strip()] = value.strip()
            continue
        triple, graph = parse_quad_line(raw, lineno)
        quads.append((triple, graph, lineno))
    return meta, quads


# ---------------------------------------------------------------------------
# SU-layer serialization (snapshots, nanopub pubinfo)
# ---------------------------------------------------------------------------

SU_NS = "https://w3id.org/semunits/vocab#"
SU_STATEMENT = Iri(SU_NS + "StatementUnit")
SU_KIND_CLASS = {
    "item": Iri(SU_NS + "ItemUnit"),
    "item-group": Iri(SU_NS + "ItemGroupUnit"),
    "dataset": Iri(SU_NS + "DatasetUnit"),
    "granularity-tree": Iri(SU_NS + "GranularityTreeUnit"),
    "granular-item-group": Iri(SU_NS + "GranularItemGroupUnit"),
}
P_TYPE = Iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
P_INSTANTIATES = Iri(SU_NS + "instantiates")
P_SUBJECT = Iri(SU_NS + "hasSubject")
P_MEMBER = Iri(SU_NS + "hasMember")
P_QUANT = Iri(SU_NS + "quantification")
P_STATUS = Iri(SU_NS + "status")
P_CREATED = Iri("http://purl.org/dc/terms/created")
P_PREDECESSOR = Iri(SU_NS + "predecessor")
P_RELATION = Iri(SU_NS + "relationClass")


def su_layer_triples(units: Iterable[object]) -> List[Triple]:
    """SU-layer records as plain triples (sorted), for snapshot freezing."""
    from .units import CompoundUnit, StatementUnit

    out: List[Triple] = []
    for unit in units:
        if isinstance(unit, StatementUnit):
            out.append(Triple(unit.id, P_TYPE, SU_STATEMENT))
            out.append(Triple(unit.id, P_INSTANTIATES, unit.class_id.iri))
            out.append(Triple(unit.id, P_SUBJECT, unit.subject))
            out.append(Triple(unit.id, P_QUANT, Iri(SU_NS + unit.quantification)))
            if unit.predecessor is not None:
                out.append(Triple(unit.id, P_PREDECESSOR, unit.predecessor))
        elif isinstance(unit, CompoundUnit):
            out.append(Triple(unit.id, P_TYPE, SU_KIND_CLASS[unit.kind]))
            if unit.subject is not None:
                out.append(Triple(unit.id, P_SUBJECT, unit.subject))
            if unit.relation_class is not None:
                out.append(Triple(unit.id, P_RELATION, unit.relation_class.iri))
            for member in sorted(unit.members, key=lambda m: m.value):
                out.append(Triple(unit.id, P_MEMBER, member))
        status = getattr(unit, "status")
        out.append(Triple(unit.id, P_STATUS, Literal(status, Iri(XSD_STRING))))
        out.append(
            Triple(unit.id, P_CREATED, Literal(getattr(unit, "created_at"), Iri(XSD_STRING)))
        )
    return sorted(out, key=lambda t: t.sort_key())


# ---------------------------------------------------------------------------
# Nanopublication bundles
# ---------------------------------------------------------------------------

NP_NS = "http://www.nanopub.org/nschema#"
NP_NANOPUB = Iri(NP_NS + "Nanopublication")
NP_HAS_ASSERTION = Iri(NP_NS + "hasAssertion")
NP_HAS_PROVENANCE = Iri(NP_NS + "hasProvenance")
NP_HAS_PUBINFO = Iri(NP_NS + "hasPublicationInfo")
PROV_NS = "http://www.w3.org/ns/prov#"
P_ATTRIBUTED = Iri(PROV_NS + "wasAttributedTo")
P_GENERATED = Iri(PROV_NS + "generatedAtTime")
P_REVISION_OF = Iri(PROV_NS + "wasRevisionOf")
P_CERTAINTY = Iri(SU_NS + "certainty")


@dataclass(frozen=True)
class NanopubBundle:
    """Three disjoint named graphs around one statement unit, plus the head
    graph wiring them together."""

    unit: Iri
    head: Tuple[Triple, ...]
    assertion: Tuple[Triple, ...]
    provenance: Tuple[Triple, ...]
    pubinfo: Tuple[Triple, ...]

    def graph_iri(self, part: str) -> Iri:
        return Iri(f"{self.unit.value}/{part}")

    def graphs(self) -> Dict[str, Tuple[Triple, ...]]:
        return {
            "head": self.head,
            "assertion": self.assertion,
            "provenance": self.provenance,
            "pubinfo": self.pubinfo,
        }

    def pairwise_disjoint(self) -> bool:
        names = ("assertion", "provenance", "pubinfo")
        sets = {n: set(g) for n, g in self.graphs().items() if n in names}
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                if sets[a] & sets[b]:
                    return False
        return True


def render_nanopub(bundle: NanopubBundle) -> str:
    """TriG text: one named-graph block per part, triples in canonical order."""
    blocks = []
    for part in ("head", "assertion", "provenance", "pubinfo"):
        triples = sorted(bundle.graphs()[part], key=lambda t: t.sort_key())
        lines = [f"<{bundle.graph_iri(part).value}> {{"]
        for t in triples:
            lines.append(
                f"  <{t.subject.value}> <{t.predicate.value}> {term_text(t.object)} ."
            )
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n".join(blocks) + "\n"
