"""Unit model: statement units and the compound unit kinds.

Units live in the SUs-graph layer. A statement unit owns its data-graph
triples (held by the quad store); compound units only reference members, so
their data-graphs are unions computed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Set, Tuple

from .errors import ValidationError
from .registry import StatementUnitClassId
from .terms import Iri, Term

QUANT_ASSERTIONAL = "assertional"
QUANT_CONTINGENT = "contingent"
QUANT_UNIVERSAL = "universal"

KIND_ITEM = "item"
KIND_ITEM_GROUP = "item-group"
KIND_DATASET = "dataset"
KIND_TREE = "granularity-tree"
KIND_GRANULAR_GROUP = "granular-item-group"

ITEM_INSTANCE = "instance"
ITEM_CLASS = "class"

STATUS_ACTIVE = "active"
STATUS_DELETED = "soft-deleted"

CERTAINTY_LEVELS = ("certain", "likely", "possible", "unlikely")

VOCAB_NS = "https://w3id.org/semunits/vocab#"


@dataclass(frozen=True)
class CertaintyLevel:
    level: str
    note: Optional[str] = None

    def __post_init__(self):
        if self.level not in CERTAINTY_LEVELS:
            raise ValidationError(
                f"unknown certainty level {self.level!r}, expected one of {CERTAINTY_LEVELS}"
            )

    def term(self) -> Iri:
        return Iri(VOCAB_NS + self.level)

    @staticmethod
    def from_term(term: Iri, note: Optional[str] = None) -> "CertaintyLevel":
        if not term.value.startswith(VOCAB_NS):
            raise ValidationError(f"not a certainty term: {term}")
        return CertaintyLevel(term.value[len(VOCAB_NS):], note)


@dataclass
class StatementUnit:
    id: Iri
    class_id: StatementUnitClassId
    quantification: str
    subject: Iri
    objects: Tuple[Term, ...]
    bindings: Dict[str, Term]
    fresh_nodes: Dict[str, Iri]
    status: str = STATUS_ACTIVE
    created_at: str = ""
    predecessor: Optional[Iri] = None
    successor: Optional[Iri] = None

    def __post_init__(self):
        if self.quantification not in (
            QUANT_ASSERTIONAL,
            QUANT_CONTINGENT,
            QUANT_UNIVERSAL,
        ):
            raise ValidationError(f"unknown quantification {self.quantification!r}")
        if len(self.objects) < 1:
            raise ValidationError(f"statement unit {self.id} has no objects")

    @property
    def active(self) -> bool:
        return self.status == STATUS_ACTIVE


@dataclass
class CompoundUnit:
    id: Iri
    kind: str
    members: Set[Iri] = field(default_factory=set)
    subject: Optional[Iri] = None
    item_kind: Optional[str] = None  # instance|class, item units only
    relation_class: Optional[StatementUnitClassId] = None  # granularity kinds only
    label: Optional[str] = None
    item_class_label: Optional[str] = None
    status: str = STATUS_ACTIVE
    created_at: str = ""

    def __post_init__(self):
        if self.kind not in (
            KIND_ITEM,
            KIND_ITEM_GROUP,
            KIND_DATASET,
            KIND_TREE,
            KIND_GRANULAR_GROUP,
        ):
            raise ValidationError(f"unknown compound kind {self.kind!r}")
        if self.kind == KIND_ITEM and self.subject is None:
            raise ValidationError("item unit requires a subject")

    @property
    def active(self) -> bool:
        return self.status == STATUS_ACTIVE

