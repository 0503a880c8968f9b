"""Scholarly workflow: DOI-driven publication entries, activity and result
structure, partonomies, qualities, measurements, and the navigation tree.

Every operation here orchestrates logged core engine operations and adds no
store writes of its own, so replaying the engine log reproduces everything.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .display import label_for
from .engine import DEFAULT_ACTOR, KnowledgeBase
from .errors import (
    BindingError,
    DuplicateEntry,
    NotEnabled,
    NotStatementUnit,
    RangeError,
    UnknownBearer,
    UnknownEntry,
    UnknownParent,
    UnknownUnit,
    UnresolvedTerm,
    ValidationError,
)
from .terms import Iri, Literal, XSD_GYEAR, integer_literal, string_literal
from .units import CompoundUnit, KIND_ITEM_GROUP, StatementUnit

R0_TERM = Iri("http://purl.obolibrary.org/obo/OMIT_0024604")
WEIGHT_TERM = Iri("http://purl.obolibrary.org/obo/PATO_0000128")
RESEARCH_PAPER = Iri("http://purl.org/spar/fabio/ResearchPaper")

_DOI_RE = re.compile(r"^10\.\d{4,9}/\S+$")

# navigation ordering: structural statements first, then description links
_NAV_PRECEDENCE = {
    "reports": 0,
    "has-output": 1,
    "realizes": 1,
    "achieves": 1,
    "is-about": 2,
    "has-part-activity": 3,
    "has-part-material": 3,
}
_NAV_DEFAULT_PRECEDENCE = 4


@dataclass(frozen=True)
class Doi:
    value: str

    def __post_init__(self):
        if not _DOI_RE.match(self.value):
            raise ValidationError(f"not a DOI: {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BibliographicRecord:
    doi: Doi
    title: str
    authors: Tuple[str, ...] = ()
    year: Optional[int] = None
    venue: Optional[str] = None

    def __post_init__(self):
        if not self.title.strip():
            raise BindingError(
                "bibliographic record needs a nonempty title",
                details={"title": "empty"},
            )
        object.__setattr__(self, "authors", tuple(self.authors))

    @staticmethod
    def from_dict(data: dict) -> "BibliographicRecord":
        return BibliographicRecord(
            doi=Doi(data["doi"]),
            title=data.get("title", ""),
            authors=tuple(data.get("authors", ())),
            year=int(data["year"]) if data.get("year") is not None else None,
            venue=data.get("venue"),
        )


@dataclass(frozen=True)
class NavNode:
    item: Iri
    parent: Optional[Iri]  # parent item unit; None = directly under the root group
    label: str
    subject: Optional[Iri] = None

    def to_json(self) -> dict:
        return {
            "item": self.item.value,
            "parent": self.parent.value if self.parent else None,
            "label": self.label,
            "subject": self.subject.value if self.subject else None,
        }


@dataclass(frozen=True)
class NavigationTree:
    root: Iri
    nodes: Tuple[NavNode, ...]

    def to_json(self) -> dict:
        return {"root": self.root.value, "nodes": [n.to_json() for n in self.nodes]}


def _decimal(value, name: str) -> Decimal:
    try:
        return Decimal(str(value))
    except InvalidOperation:
        raise RangeError(f"{name} is not a number: {value!r}") from None


class ScholarlyWorkflow:
    def __init__(self, kb: KnowledgeBase):
        self.kb = kb

    # -- entries -----------------------------------------------------------

    def entry_for_doi(self, doi: Doi) -> Optional[CompoundUnit]:
        for su in self.kb.statements_of_class("has-DOI"):
            bound = su.bindings.get("doi")
            if isinstance(bound, Literal) and bound.lexical == doi.value:
                group = self._group_for_work(su.subject)
                if group is not None:
                    return group
        return None

    def _group_for_work(self, work: Iri) -> Optional[CompoundUnit]:
        for u in self.kb.units.values():
            if (
                isinstance(u, CompoundUnit)
                and u.kind == KIND_ITEM_GROUP
                and u.active
                and u.subject == work
            ):
                return u
        return None

    def entries(self) -> List[dict]:
        out = []
        for su in self.kb.statements_of_class("has-DOI"):
            group = self._group_for_work(su.subject)
            if group is None:
                continue
            bound = su.bindings.get("doi")
            out.append(
                {
                    "entry": group.id.value,
                    "doi": bound.lexical if isinstance(bound, Literal) else None,
                    "title": label_for(self.kb, su.subject),
                    "subject": su.subject.value,
                }
            )
        return out

    def create_publication_entry(
        self, doi: Doi, record: BibliographicRecord, actor: str = DEFAULT_ACTOR
    ) -> CompoundUnit:
        if record.doi != doi:
            raise ValidationError(
                f"record DOI {record.doi} does not match requested DOI {doi}"
            )
        if self.entry_for_doi(doi) is not None:
            raise DuplicateEntry(f"an entry for {doi} already exists")
        kb = self.kb
        work = kb.mint_node()
        kb.create_statement_unit(
            "has-title", {"work": work, "title": string_literal(record.title)}, actor
        )
        kb.create_statement_unit(
            "has-DOI", {"work": work, "doi": string_literal(doi.value)}, actor
        )
        kb.create_statement_unit(
            "instance-of", {"subject": work, "class": RESEARCH_PAPER}, actor
        )
        for position, name in enumerate(record.authors, start=1):
            kb.create_statement_unit(
                "has-author",
                {
                    "work": work,
                    "name": string_literal(name),
                    "ordinal": integer_literal(position),
                },
                actor,
            )
        if record.year is not None:
            kb.create_statement_unit(
                "has-publication-year",
                {"work": work, "year": Literal(str(record.year), Iri(XSD_GYEAR))},
                actor,
            )
        if record.venue:
            kb.create_statement_unit(
                "published-in", {"work": work, "venue": string_literal(record.venue)}, actor
            )
        reports = kb.create_statement_unit(
            "reports", {"work": work, "label": string_literal("research activity")}, actor
        )
        activity = reports.fresh_nodes["activity"]
        output = kb.create_statement_unit(
            "has-output",
            {"activity": activity, "label": string_literal("research result")},
            actor,
        )
        result = output.fresh_nodes["result"]
        publication_item = kb.ensure_item_unit(work, "publication", actor)
        activity_item = kb.item_by_subject(activity)
        result_item = kb.item_by_subject(result)
        return kb.form_item_group(
            [publication_item.id, activity_item.id, result_item.id], actor
        )

    # -- structure ----------------------------------------------------------

    def _require_item_subject(self, subject: Iri, class_label: str, error):
        item = self.kb.item_by_subject(subject)
        if item is None:
            raise error(f"no item unit with subject {subject}")
        if item.item_class_label is not None and item.item_class_label != class_label:
            raise error(
                f"item for {subject} is a {item.item_class_label}, not a {class_label}"
            )
        return item

    def add_activity_part(
        self, parent_activity: Iri, label: str, actor: str = DEFAULT_ACTOR
    ) -> Tuple[StatementUnit, CompoundUnit]:
        self._require_item_subject(parent_activity, "research-activity", UnknownParent)
        su = self.kb.create_statement_unit(
            "has-part-activity",
            {"whole": parent_activity, "label": string_literal(label)},
            actor,
        )
        return su, self.kb.item_by_subject(su.fresh_nodes["part"])

    def add_material_part(
        self, parent: Iri, part_class_term: Iri, actor: str = DEFAULT_ACTOR
    ) -> Tuple[StatementUnit, CompoundUnit]:
        self._require_item_subject(parent, "material-entity", UnknownParent)
        if self.kb.resolve_term(part_class_term) is None:
            raise UnresolvedTerm(f"no terminology match for {part_class_term}")
        su = self.kb.create_statement_unit(
            "has-part-material",
            {"whole": parent, "part-class": part_class_term},
            actor,
        )
        return su, self.kb.item_by_subject(su.fresh_nodes["part"])

    def add_quality(
        self, bearer: Iri, quality_class_term: Iri, actor: str = DEFAULT_ACTOR
    ) -> StatementUnit:
        self._require_item_subject(bearer, "material-entity", UnknownBearer)
        if self.kb.resolve_term(quality_class_term) is None:
            raise UnresolvedTerm(f"no terminology match for {quality_class_term}")
        return self.kb.create_statement_unit(
            "has-quality", {"bearer": bearer, "quality-class": quality_class_term}, actor
        )

    # -- measurements ---------------------------------------------------------

    def enabled_measurement(self, quality_su: StatementUnit) -> Optional[str]:
        if quality_su.class_id.label not in self.kb.registry.statement_classes:
            return None
        cls = self.kb.registry.statement_class(quality_su.class_id.label)
        for fu in cls.follow_ups:
            if quality_su.bindings.get(fu.slot) == fu.term:
                return fu.target
        return None

    def add_measurement(
        self,
        quality_su_id: Iri,
        value,
        ci_level=None,
        low=None,
        high=None,
        unit_term: Optional[Iri] = None,
        actor: str = DEFAULT_ACTOR,
    ) -> StatementUnit:
        unit = self.kb.unit(quality_su_id)
        if unit is None:
            raise UnknownUnit(f"no unit {quality_su_id}")
        if not isinstance(unit, StatementUnit):
            raise NotStatementUnit(f"{quality_su_id} is not a statement unit")
        target = self.enabled_measurement(unit)
        if target is None:
            raise NotEnabled(
                f"{quality_su_id} enables no measurement follow-up"
            )
        if unit_term is None:
            raise BindingError("a measurement needs a unit term", details={"unit": "missing"})
        cls = self.kb.registry.statement_class(target)
        quality_cls = self.kb.registry.statement_class(unit.class_id.label)
        quality_node = unit.fresh_nodes[quality_cls.object_nodes[0]]
        dec_value = _decimal(value, "value")
        bindings = {
            "quality": quality_node,
            "value": Literal(str(dec_value), Iri("http://www.w3.org/2001/XMLSchema#decimal")),
            "unit": unit_term,
        }
        if cls.slot("level") is not None:
            if ci_level is None or low is None or high is None:
                raise RangeError(
                    f"{target} needs a confidence level and interval bounds"
                )
            dec_level = _decimal(ci_level, "ci_level")
            dec_low = _decimal(low, "low")
            dec_high = _decimal(high, "high")
            if not (0 < dec_level < 1):
                raise RangeError(f"confidence level must be in (0, 1), got {dec_level}")
            if not (dec_low <= dec_value <= dec_high):
                raise RangeError(
                    f"interval must satisfy low <= value <= high, got "
                    f"{dec_low} / {dec_value} / {dec_high}"
                )
            xsd_decimal = Iri("http://www.w3.org/2001/XMLSchema#decimal")
            bindings["level"] = Literal(str(dec_level), xsd_decimal)
            bindings["low"] = Literal(str(dec_low), xsd_decimal)
            bindings["high"] = Literal(str(dec_high), xsd_decimal)
        return self.kb.create_statement_unit(target, bindings, actor)

    # -- navigation -------------------------------------------------------------

    def build_navigation_tree(self, entry_id: Iri) -> NavigationTree:
        group = self.kb.unit(entry_id)
        if (
            group is None
            or not isinstance(group, CompoundUnit)
            or group.kind != KIND_ITEM_GROUP
            or not group.active
        ):
            raise UnknownEntry(f"no item group entry {entry_id}")
        items = self.kb.group_items(group)
        items_by_subject: Dict[str, CompoundUnit] = {
            it.subject.value: it for it in items
        }
        children: Dict[str, List[Tuple[int, str, str]]] = {}
        for su in self.kb.active_statements():
            if su.subject.value not in items_by_subject:
                continue
            precedence = _NAV_PRECEDENCE.get(su.class_id.label, _NAV_DEFAULT_PRECEDENCE)
            for obj in su.objects:
                if (
                    isinstance(obj, Iri)
                    and obj.value in items_by_subject
                    and obj.value != su.subject.value
                ):
                    children.setdefault(su.subject.value, []).append(
                        (precedence, su.id.value, obj.value)
                    )
        nodes: List[NavNode] = []
        visited: set = set()

        def visit(subject_value: str, parent: Optional[Iri]):
            if subject_value in visited:
                return
            visited.add(subject_value)
            item = items_by_subject[subject_value]
            nodes.append(
                NavNode(
                    item=item.id,
                    parent=parent,
                    label=label_for(self.kb, item.subject),
                    subject=item.subject,
                )
            )
            for _, _, child in sorted(children.get(subject_value, [])):
                visit(child, item.id)

        visit(group.subject.value, None)
        for it in items:
            visit(it.subject.value, None)
        return NavigationTree(root=group.id, nodes=tuple(nodes))
