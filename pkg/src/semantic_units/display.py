"""Display rendering: structured payloads from display templates.

Payloads carry labeled fields with their source data-graph nodes, so a UI can
show one line per unit and still point back at the exact nodes the line draws
on. No markup is produced here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Dict, List, Optional

from .errors import MissingTemplate, UnknownUnit
from .registry import (
    DisplayTemplate,
    FixedIri,
    FreshRef,
    SlotRef,
    StatementUnitClass,
)
from .terms import Iri, Literal, RDF_TYPE, RDFS_LABEL, Term
from .units import CompoundUnit, StatementUnit

DCTERMS_TITLE = "http://purl.org/dc/terms/title"


@dataclass
class DisplayField:
    placeholder: str
    text: str
    filter: Optional[str] = None
    source_node: Optional[str] = None


@dataclass
class DisplayPayload:
    unit: str
    kind: str
    class_label: Optional[str]
    line: str
    fields: List[DisplayField] = field(default_factory=list)
    attached: List["DisplayPayload"] = field(default_factory=list)
    members: List["DisplayPayload"] = field(default_factory=list)
    subject: Optional[str] = None

    def value_bearing_nodes(self) -> List[str]:
        """Distinct data-graph nodes the rendered line draws on."""
        seen: Dict[str, None] = {}
        for f in self.fields:
            if f.source_node is not None:
                seen.setdefault(f.source_node)
        for child in self.attached:
            for node in child.value_bearing_nodes():
                seen.setdefault(node)
        return list(seen)

    def to_json(self) -> dict:
        return {
            "unit": self.unit,
            "kind": self.kind,
            "class": self.class_label,
            "line": self.line,
            "subject": self.subject,
            "fields": [
                {
                    "placeholder": f.placeholder,
                    "text": f.text,
                    "filter": f.filter,
                    "source_node": f.source_node,
                }
                for f in self.fields
            ],
            "attached": [c.to_json() for c in self.attached],
            "members": [c.to_json() for c in self.members],
            "value_bearing_nodes": self.value_bearing_nodes(),
        }


def apply_pct(lexical: str) -> str:
    try:
        value = Decimal(lexical) * 100
    except InvalidOperation:
        return lexical
    text = format(value.normalize(), "f")
    return f"{text}%"


def label_for(kb, node: Iri) -> str:
    """Label resolution: rdfs:label, dcterms:title, the vocabulary, the
    node's type label, then the IRI tail."""
    for triple, _ in kb.store.triples_with_subject(node):
        if triple.predicate.value == RDFS_LABEL and isinstance(triple.object, Literal):
            return triple.object.lexical
    for triple, _ in kb.store.triples_with_subject(node):
        if triple.predicate.value == DCTERMS_TITLE and isinstance(triple.object, Literal):
            return triple.object.lexical
    resolved = kb.resolve_term(node)
    if resolved is not None:
        return resolved
    for triple, _ in kb.store.triples_with_subject(node):
        if triple.predicate.value == RDF_TYPE and isinstance(triple.object, Iri):
            type_label = kb.resolve_term(triple.object)
            if type_label is not None:
                return type_label
    return node.local_name()


def _literal_source(kb, cls: StatementUnitClass, unit: StatementUnit, slot: str) -> Optional[str]:
    carrier = cls.literal_carrier(slot)
    if carrier is None:
        return None
    if isinstance(carrier, FreshRef):
        node = unit.fresh_nodes.get(carrier.name)
        return node.value if node else None
    if isinstance(carrier, SlotRef):
        bound = unit.bindings.get(carrier.name)
        return bound.value if isinstance(bound, Iri) else None
    if isinstance(carrier, FixedIri):
        return carrier.iri.value
    return None


def render_statement(kb, unit: StatementUnit, depth: int = 1) -> DisplayPayload:
    if unit.class_id.label not in kb.registry.statement_classes:
        # imported units carry no pattern; show the class tail and subject
        return DisplayPayload(
            unit.id.value,
            "statement",
            unit.class_id.label,
            unit.class_id.label,
            subject=unit.subject.value,
        )
    cls = kb.registry.statement_class(unit.class_id.label)
    if cls.display is None:
        raise MissingTemplate(f"class {cls.id.label} has no display template")
    payload = DisplayPayload(
        unit.id.value, "statement", cls.id.label, "", subject=unit.subject.value
    )
    parts: List[str] = []
    for segment in cls.display.segments():
        if isinstance(segment, str):
            parts.append(segment)
            continue
        name, filt = segment
        if name == "attached":
            attached_units = kb.attached_statements(unit)
            if depth > 0:
                payload.attached = [
                    render_statement(kb, child, depth - 1) for child in attached_units
                ]
            if payload.attached:
                text = ": " + "; ".join(c.line for c in payload.attached)
                parts.append(text)
            continue
        value = unit.bindings.get(name)
        if value is None:
            continue
        if isinstance(value, Iri):
            text = label_for(kb, value) if filt == "label" else value.value
            source: Optional[str] = value.value
        else:
            text = value.lexical
            if filt == "pct":
                text = apply_pct(text)
            source = _literal_source(kb, cls, unit, name)
        payload.fields.append(DisplayField(name, text, filt, source))
        parts.append(text)
    payload.line = "".join(parts)
    return payload


def _compound_line(kb, unit: CompoundUnit, template: Optional[DisplayTemplate]) -> str:
    subject_label = label_for(kb, unit.subject) if unit.subject else (unit.label or "")
    if template is None:
        return subject_label or unit.id.local_name()
    parts: List[str] = []
    for segment in template.segments():
        if isinstance(segment, str):
            parts.append(segment)
        else:
            name, _ = segment
            if name == "subject":
                parts.append(subject_label)
            # members/partonomy placeholders render in the payload, not the line
    return "".join(parts)


def render_compound(kb, unit: CompoundUnit, depth: int = 1) -> DisplayPayload:
    item_cls = kb.item_class_of(unit)
    template = item_cls.display if item_cls else None
    if unit.kind == "granularity-tree":
        tree_cls = kb.tree_class_of(unit)
        template = tree_cls.display if tree_cls else template
    payload = DisplayPayload(
        unit.id.value,
        unit.kind,
        item_cls.id.label if item_cls else None,
        _compound_line(kb, unit, template),
        subject=unit.subject.value if unit.subject else None,
    )
    if unit.subject is not None:
        payload.fields.append(
            DisplayField("subject", payload.line, None, unit.subject.value)
        )
    if depth > 0:
        for member in kb.member_units(unit):
            payload.members.append(render_unit(kb, member.id, depth - 1))
    return payload


def render_unit(kb, unit_id: Iri, depth: int = 1) -> DisplayPayload:
    unit = kb.unit(unit_id)
    if unit is None:
        raise UnknownUnit(f"no unit {unit_id}")
    if isinstance(unit, StatementUnit):
        return render_statement(kb, unit, depth)
    return render_compound(kb, unit, depth)
