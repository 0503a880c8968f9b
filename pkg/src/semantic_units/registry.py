"""Declarative statement-unit class registry.

Classes are loaded from a line-oriented text format (grammar in
docs/pattern-format.md): each class block declares slots, an ABox graph
pattern over slots / minted fresh nodes / fixed IRIs, a display template and
optional follow-up rules. Instantiating a pattern is deterministic given the
class, the bindings and the minter state, which is what guarantees that all
instances of the same class are modelled the same way.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .errors import BindingError, ParseError, ValidationError
from .store import IriMinter
from .terms import (
    Iri,
    Literal,
    NUMERIC_DATATYPES,
    RDF_TYPE,
    Term,
    Triple,
    XSD_GYEAR,
    XSD_STRING,
)

_GYEAR_RE = re.compile(r"^-?\d{4,}$")

ROLE_SUBJECT = "subject"
ROLE_OBJECT = "object"
ROLE_LITERAL = "literal"
ROLES = (ROLE_SUBJECT, ROLE_OBJECT, ROLE_LITERAL)

NODE_KIND = "node"  # minting kind shared by all pattern fresh nodes

INPUT_MODES = ("ontology-term", "numeric", "text", "unit-reference")

QUANTIFICATIONS = ("assertional", "contingent", "universal")


@dataclass(frozen=True)
class StatementUnitClassId:
    iri: Iri
    label: str


@dataclass(frozen=True)
class SlotSpec:
    name: str
    role: str
    range: Iri
    input_mode: str
    required: bool = True


@dataclass(frozen=True)
class SlotRef:
    name: str


@dataclass(frozen=True)
class FreshRef:
    name: str


@dataclass(frozen=True)
class FixedIri:
    iri: Iri


PatternNode = Union[SlotRef, FreshRef, FixedIri]


@dataclass(frozen=True)
class TripleTemplate:
    subject: PatternNode
    predicate: Iri
    object: PatternNode


@dataclass(frozen=True)
class FreshSpec:
    """A node minted on every instantiation; ``item_class`` marks freshes
    that become the subject of a new item unit of that class."""

    name: str
    item_class: Optional[str] = None


@dataclass(frozen=True)
class GraphPattern:
    templates: Tuple[TripleTemplate, ...]
    freshes: Tuple[FreshSpec, ...]

    def fresh_names(self) -> List[str]:
        return [f.name for f in self.freshes]


@dataclass(frozen=True)
class FollowUp:
    """Enables ``target`` when ``slot`` is bound to ``term``."""

    target: str
    slot: str
    term: Iri


_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_-]*)(?:\|([a-z]+))?\}")
_FILTERS = ("label", "pct")
_SPECIAL_PLACEHOLDERS = ("attached", "members", "subject", "partonomy")


@dataclass(frozen=True)
class DisplayTemplate:
    """Template text with {placeholder} / {placeholder|filter} markers."""

    text: str

    def segments(self) -> List[Union[str, Tuple[str, Optional[str]]]]:
        out: List[Union[str, Tuple[str, Optional[str]]]] = []
        pos = 0
        for m in _PLACEHOLDER_RE.finditer(self.text):
            if m.start() > pos:
                out.append(self.text[pos : m.start()])
            out.append((m.group(1), m.group(2)))
            pos = m.end()
        if pos < len(self.text):
            out.append(self.text[pos:])
        return out

    def placeholder_names(self) -> List[str]:
        return [m.group(1) for m in _PLACEHOLDER_RE.finditer(self.text)]

    def filters(self) -> List[str]:
        return [m.group(2) for m in _PLACEHOLDER_RE.finditer(self.text) if m.group(2)]


@dataclass
class StatementUnitClass:
    id: StatementUnitClassId
    description: str
    quantification: str
    slots: Tuple[SlotSpec, ...]
    pattern: GraphPattern
    partial_order: bool = False
    display: Optional[DisplayTemplate] = None
    follow_ups: Tuple[FollowUp, ...] = ()
    subject_node: Optional[str] = None  # fresh name overriding the unit subject
    object_nodes: Tuple[str, ...] = ()  # freshes listed before slot objects

    def slot(self, name: str) -> Optional[SlotSpec]:
        for s in self.slots:
            if s.name == name:
                return s
        return None

    def subject_slot(self) -> SlotSpec:
        for s in self.slots:
            if s.role == ROLE_SUBJECT:
                return s
        raise ValidationError(f"class {self.id.label} has no subject slot")

    def literal_carrier(self, slot_name: str) -> Optional[PatternNode]:
        """The pattern node carrying a slot value (subject of the template
        where the slot first appears as object); display uses it to attribute
        a rendered value to a data-graph node."""
        for t in self.pattern.templates:
            if isinstance(t.object, SlotRef) and t.object.name == slot_name:
                return t.subject
        return None


@dataclass
class ItemUnitClass:
    id: StatementUnitClassId
    description: str
    subject_class: Iri
    offers: Tuple[str, ...] = ()
    display: Optional[DisplayTemplate] = None


@dataclass
class TreeUnitClass:
    id: StatementUnitClassId
    description: str
    relations: Tuple[str, ...] = ()
    display: Optional[DisplayTemplate] = None


@dataclass
class Registry:
    statement_classes: Dict[str, StatementUnitClass] = field(default_factory=dict)
    item_classes: Dict[str, ItemUnitClass] = field(default_factory=dict)
    tree_classes: Dict[str, TreeUnitClass] = field(default_factory=dict)
    prefixes: Dict[str, str] = field(default_factory=dict)

    def statement_class(self, key: str) -> StatementUnitClass:
        cls = self.statement_classes.get(key)
        if cls is None:
            for c in self.statement_classes.values():
                if c.id.iri.value == key:
                    return c
            raise ValidationError(f"unknown statement unit class: {key}")
        return cls

    def item_class(self, key: str) -> ItemUnitClass:
        cls = self.item_classes.get(key)
        if cls is None:
            raise ValidationError(f"unknown item unit class: {key}")
        return cls

    def counts(self) -> Dict[str, int]:
        return {
            "statement_classes": len(self.statement_classes),
            "item_classes": len(self.item_classes),
            "tree_classes": len(self.tree_classes),
        }

    def partial_order_classes(self) -> List[StatementUnitClass]:
        return [c for c in self.statement_classes.values() if c.partial_order]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_LABEL_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.registry = Registry()
        self._pending_follow_ups: List[Tuple[int, StatementUnitClass, FollowUp]] = []
        self._labels_seen: Dict[str, int] = {}
        self._iris_seen: Dict[str, int] = {}

    def fail(self, lineno: int, col: int, msg: str):
        raise ParseError(msg, lineno, col)

    def resolve_term(self, token: str, lineno: int) -> Iri:
        if token.startswith("<") and token.endswith(">"):
            try:
                return Iri(token[1:-1])
            except ValidationError as exc:
                self.fail(lineno, 1, str(exc))
        if ":" in token:
            prefix, local = token.split(":", 1)
            base = self.registry.prefixes.get(prefix)
            if base is None:
                self.fail(lineno, 1, f"undeclared prefix {prefix!r}")
            try:
                return Iri(base + local)
            except ValidationError as exc:
                self.fail(lineno, 1, str(exc))
        self.fail(lineno, 1, f"expected an IRI or curie, got {token!r}")

    def parse(self) -> Registry:
        block: Optional[dict] = None
        for idx, raw in enumerate(self.lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            keyword = parts[0]
            rest = parts[1] if len(parts) > 1 else ""
            if keyword == "prefix":
                self._parse_prefix(idx, rest)
            elif keyword == "class":
                if block is not None:
                    self._finish_block(block)
                block = self._open_block(idx, rest)
            elif block is None:
                self.fail(idx, 1, f"{keyword!r} outside a class block")
            else:
                self._parse_block_line(block, idx, keyword, rest)
        if block is not None:
            self._finish_block(block)
        self._resolve_follow_ups()
        self._validate_registry()
        return self.registry

    def _parse_prefix(self, lineno: int, rest: str):
        parts = rest.split()
        if len(parts) != 2:
            self.fail(lineno, 1, "prefix expects: prefix <name> <iri>")
        name, iri_token = parts
        if not _NAME_RE.match(name):
            self.fail(lineno, 1, f"bad prefix name {name!r}")
        if not (iri_token.startswith("<") and iri_token.endswith(">")):
            self.fail(lineno, 1, "prefix IRI must be written in angle brackets")
        try:
            Iri(iri_token[1:-1] + "x")
        except ValidationError as exc:
            self.fail(lineno, 1, str(exc))
        self.registry.prefixes[name] = iri_token[1:-1]

    def _open_block(self, lineno: int, rest: str) -> dict:
        parts = rest.split()
        if len(parts) != 3:
            self.fail(lineno, 1, "class expects: class <kind> <label> <iri>")
        kind, label, iri_token = parts
        if kind not in ("statement", "item", "tree"):
            self.fail(lineno, 1, f"unknown class kind {kind!r}")
        if not _LABEL_RE.match(label):
            self.fail(lineno, 1, f"bad class label {label!r}")
        iri = self.resolve_term(iri_token, lineno)
        if label in self._labels_seen:
            self.fail(
                lineno, 1,
                f"duplicate class label {label!r} (first at line {self._labels_seen[label]})",
            )
        if iri.value in self._iris_seen:
            self.fail(
                lineno, 1,
                f"duplicate class IRI {iri} (first at line {self._iris_seen[iri.value]})",
            )
        self._labels_seen[label] = lineno
        self._iris_seen[iri.value] = lineno
        return {
            "kind": kind,
            "line": lineno,
            "id": StatementUnitClassId(iri, label),
            "description": "",
            "quantification": "assertional",
            "slots": [],
            "freshes": [],
            "templates": [],
            "partial_order": False,
            "display": None,
            "follow_ups": [],
            "subject_node": None,
            "object_nodes": [],
            "subject_class": None,
            "offers": [],
            "relations": [],
        }

    def _parse_block_line(self, block: dict, lineno: int, keyword: str, rest: str):
        kind = block["kind"]
        if keyword == "description":
            if not rest:
                self.fail(lineno, 1, "description must not be empty")
            block["description"] = rest
        elif keyword == "display":
            block["display"] = DisplayTemplate(rest)
        elif keyword == "quantification" and kind == "statement":
            if rest not in QUANTIFICATIONS:
                self.fail(lineno, 1, f"unknown quantification {rest!r}")
            block["quantification"] = rest
        elif keyword == "slot" and kind == "statement":
            self._parse_slot(block, lineno, rest)
        elif keyword == "fresh" and kind == "statement":
            self._parse_fresh(block, lineno, rest)
        elif keyword == "subject-node" and kind == "statement":
            block["subject_node"] = rest.strip()
        elif keyword == "object-node" and kind == "statement":
            block["object_nodes"].append(rest.strip())
        elif keyword == "triple" and kind == "statement":
            self._parse_triple(block, lineno, rest)
        elif keyword == "partial-order" and kind == "statement":
            block["partial_order"] = True
        elif keyword == "follow-up" and kind == "statement":
            self._parse_follow_up(block, lineno, rest)
        elif keyword == "subject-class" and kind == "item":
            block["subject_class"] = self.resolve_term(rest.strip(), lineno)
        elif keyword == "offers" and kind == "item":
            block["offers"].extend(rest.split())
        elif keyword == "relation" and kind == "tree":
            block["relations"].extend(rest.split())
        else:
            self.fail(lineno, 1, f"keyword {keyword!r} not valid in a {kind} class block")

    def _parse_slot(self, block: dict, lineno: int, rest: str):
        parts = rest.split()
        if len(parts) not in (4, 5):
            self.fail(
                lineno, 1,
                "slot expects: slot <name> <role> <range> <input-mode> [required|optional]",
            )
        name, role, range_token, mode = parts[:4]
        required = True
        if len(parts) == 5:
            if parts[4] not in ("required", "optional"):
                self.fail(lineno, 1, f"expected required|optional, got {parts[4]!r}")
            required = parts[4] == "required"
        if not _NAME_RE.match(name):
            self.fail(lineno, 1, f"bad slot name {name!r}")
        if role not in ROLES:
            self.fail(lineno, 1, f"unknown slot role {role!r}")
        if mode not in INPUT_MODES:
            self.fail(lineno, 1, f"unknown input mode {mode!r}")
        if any(s.name == name for s in block["slots"]):
            self.fail(lineno, 1, f"duplicate slot {name!r}")
        block["slots"].append(
            SlotSpec(name, role, self.resolve_term(range_token, lineno), mode, required)
        )

    def _parse_fresh(self, block: dict, lineno: int, rest: str):
        parts = rest.split()
        if not parts:
            self.fail(lineno, 1, "fresh expects: fresh <name> [item=<item-class>]")
        name = parts[0]
        if not _NAME_RE.match(name):
            self.fail(lineno, 1, f"bad fresh-node name {name!r}")
        if any(f.name == name for f in block["freshes"]):
            self.fail(lineno, 1, f"duplicate fresh node {name!r}")
        item_class = None
        for extra in parts[1:]:
            if extra.startswith("item="):
                item_class = extra[len("item="):]
            else:
                self.fail(lineno, 1, f"unknown fresh option {extra!r}")
        block["freshes"].append(FreshSpec(name, item_class))

    def _node_token(self, block: dict, lineno: int, token: str) -> PatternNode:
        if token.startswith("$"):
            return SlotRef(token[1:])
        if token.startswith("@"):
            return FreshRef(token[1:])
        return FixedIri(self.resolve_term(token, lineno))

    def _parse_triple(self, block: dict, lineno: int, rest: str):
        parts = rest.split()
        if len(parts) != 3:
            self.fail(lineno, 1, "triple expects exactly three tokens: <s> <p> <o>")
        s = self._node_token(block, lineno, parts[0])
        if parts[1].startswith(("$", "@")):
            self.fail(lineno, 1, "predicates must be fixed IRIs")
        p = self.resolve_term(parts[1], lineno)
        o = self._node_token(block, lineno, parts[2])
        block["templates"].append(TripleTemplate(s, p, o))

    def _parse_follow_up(self, block: dict, lineno: int, rest: str):
        m = re.match(r"^(\S+)\s+when\s+([A-Za-z_][A-Za-z0-9_-]*)\s*=\s*(\S+)$", rest)
        if not m:
            self.fail(lineno, 1, "follow-up expects: follow-up <class> when <slot>=<term>")
        target, slot, term_token = m.groups()
        term = self.resolve_term(term_token, lineno)
        block["follow_ups"].append((lineno, FollowUp(target, slot, term)))

    def _finish_block(self, block: dict):
        kind = block["kind"]
        lineno = block["line"]
        if not block["description"]:
            self.fail(lineno, 1, f"class {block['id'].label!r} is missing a description")
        if kind == "statement":
            cls = StatementUnitClass(
                id=block["id"],
                description=block["description"],
                quantification=block["quantification"],
                slots=tuple(block["slots"]),
                pattern=GraphPattern(
                    tuple(block["templates"]), tuple(block["freshes"])
                ),
                partial_order=block["partial_order"],
                display=block["display"],
                subject_node=block["subject_node"],
                object_nodes=tuple(block["object_nodes"]),
            )
            self._validate_statement_class(cls, lineno)
            for fu_line, fu in block["follow_ups"]:
                self._pending_follow_ups.append((fu_line, cls, fu))
            self.registry.statement_classes[cls.id.label] = cls
        elif kind == "item":
            if block["subject_class"] is None:
                self.fail(lineno, 1, "item class requires a subject-class line")
            cls_i = ItemUnitClass(
                id=block["id"],
                description=block["description"],
                subject_class=block["subject_class"],
                offers=tuple(block["offers"]),
                display=block["display"],
            )
            self.registry.item_classes[cls_i.id.label] = cls_i
        else:
            cls_t = TreeUnitClass(
                id=block["id"],
                description=block["description"],
                relations=tuple(block["relations"]),
                display=block["display"],
            )
            self.registry.tree_classes[cls_t.id.label] = cls_t

    def _validate_statement_class(self, cls: StatementUnitClass, lineno: int):
        slot_names = {s.name for s in cls.slots}
        fresh_names = set(cls.pattern.fresh_names())
        overlap = slot_names & fresh_names
        if overlap:
            raise ValidationError(
                f"class {cls.id.label}: names used both as slot and fresh: {sorted(overlap)}"
            )
        subject_slots = [s for s in cls.slots if s.role == ROLE_SUBJECT]
        if len(subject_slots) != 1:
            raise ValidationError(
                f"class {cls.id.label}: exactly one slot must have role subject"
            )
        if not any(s.role in (ROLE_OBJECT, ROLE_LITERAL) for s in cls.slots):
            raise ValidationError(
                f"class {cls.id.label}: at least one object or literal slot required"
            )
        if not cls.pattern.templates:
            raise ValidationError(f"class {cls.id.label}: pattern has no triples")
        used_slots = set()
        used_freshes = set()
        for t in cls.pattern.templates:
            for node in (t.subject, t.object):
                if isinstance(node, SlotRef):
                    if node.name not in slot_names:
                        raise ValidationError(
                            f"class {cls.id.label}: pattern references undeclared slot ${node.name}"
                        )
                    used_slots.add(node.name)
                elif isinstance(node, FreshRef):
                    if node.name not in fresh_names:
                        raise ValidationError(
                            f"class {cls.id.label}: pattern references undeclared fresh @{node.name}"
                        )
                    used_freshes.add(node.name)
            if isinstance(t.subject, SlotRef):
                spec = cls.slot(t.subject.name)
                if spec and spec.role == ROLE_LITERAL:
                    raise ValidationError(
                        f"class {cls.id.label}: literal slot ${t.subject.name} used as triple subject"
                    )
        missing = slot_names - used_slots
        if missing:
            raise ValidationError(
                f"class {cls.id.label}: slots never used in the pattern: {sorted(missing)}"
            )
        unused_fresh = fresh_names - used_freshes
        if unused_fresh:
            raise ValidationError(
                f"class {cls.id.label}: fresh nodes never used in the pattern: {sorted(unused_fresh)}"
            )
        for name in fresh_names:
            typing = [
                t
                for t in cls.pattern.templates
                if isinstance(t.subject, FreshRef)
                and t.subject.name == name
                and t.predicate.value == RDF_TYPE
            ]
            if len(typing) != 1:
                raise ValidationError(
                    f"class {cls.id.label}: fresh node @{name} needs exactly one typing triple, has {len(typing)}"
                )
        if cls.subject_node is not None and cls.subject_node not in fresh_names:
            raise ValidationError(
                f"class {cls.id.label}: subject-node {cls.subject_node!r} is not a declared fresh node"
            )
        for name in cls.object_nodes:
            if name not in fresh_names:
                raise ValidationError(
                    f"class {cls.id.label}: object-node {name!r} is not a declared fresh node"
                )
        self._check_connected(cls)
        if cls.display is not None:
            allowed = slot_names | {"attached"}
            for ph in cls.display.placeholder_names():
                if ph not in allowed:
                    raise ValidationError(
                        f"class {cls.id.label}: display placeholder {{{ph}}} names no declared slot"
                    )
            for filt in cls.display.filters():
                if filt not in _FILTERS:
                    raise ValidationError(
                        f"class {cls.id.label}: unknown display filter |{filt}"
                    )

    def _check_connected(self, cls: StatementUnitClass):
        parent: Dict[object, object] = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            parent[find(a)] = find(b)

        nodes = set()
        for t in cls.pattern.templates:
            nodes.add(t.subject)
            nodes.add(t.object)
            union(t.subject, t.object)
        roots = {find(n) for n in nodes}
        if len(roots) > 1:
            raise ValidationError(f"class {cls.id.label}: pattern graph is not connected")

    def _resolve_follow_ups(self):
        for lineno, cls, fu in self._pending_follow_ups:
            if fu.target not in self.registry.statement_classes:
                self.fail(lineno, 1, f"follow-up target {fu.target!r} is not a statement class")
            if cls.slot(fu.slot) is None:
                self.fail(lineno, 1, f"follow-up condition names undeclared slot {fu.slot!r}")
            cls.follow_ups = cls.follow_ups + (fu,)

    def _validate_registry(self):
        for cls in self.registry.statement_classes.values():
            for fresh in cls.pattern.freshes:
                if fresh.item_class and fresh.item_class not in self.registry.item_classes:
                    raise ValidationError(
                        f"class {cls.id.label}: fresh @{fresh.name} names unknown item class {fresh.item_class!r}"
                    )
        for item in self.registry.item_classes.values():
            for offered in item.offers:
                if offered not in self.registry.statement_classes:
                    raise ValidationError(
                        f"item class {item.id.label}: offers unknown statement class {offered!r}"
                    )
            if item.display is not None:
                for ph in item.display.placeholder_names():
                    if ph not in ("subject", "members"):
                        raise ValidationError(
                            f"item class {item.id.label}: display placeholder {{{ph}}} not allowed"
                        )
        for tree in self.registry.tree_classes.values():
            for rel in tree.relations:
                cls = self.registry.statement_classes.get(rel)
                if cls is None:
                    raise ValidationError(
                        f"tree class {tree.id.label}: relation {rel!r} is not a statement class"
                    )
                if not cls.partial_order:
                    raise ValidationError(
                        f"tree class {tree.id.label}: relation {rel!r} is not flagged partial-order"
                    )
            if tree.display is not None:
                for ph in tree.display.placeholder_names():
                    if ph not in ("subject", "partonomy"):
                        raise ValidationError(
                            f"tree class {tree.id.label}: display placeholder {{{ph}}} not allowed"
                        )


def load_registry(definition_text: str) -> Registry:
    """Parse and validate a pattern-format document."""
    return _Parser(definition_text).parse()


def load_registry_file(path) -> Registry:
    with open(path, "r", encoding="utf-8") as fh:
        return load_registry(fh.read())


# ---------------------------------------------------------------------------
# Serialization (round-trip support)
# ---------------------------------------------------------------------------


def serialize_registry(registry: Registry) -> str:
    out: List[str] = []

    def iri_token(iri: Iri) -> str:
        return f"<{iri.value}>"

    for name in sorted(registry.prefixes):
        out.append(f"prefix {name} <{registry.prefixes[name]}>")
    if registry.prefixes:
        out.append("")

    for cls in registry.statement_classes.values():
        out.append(f"class statement {cls.id.label} {iri_token(cls.id.iri)}")
        out.append(f"description {cls.description}")
        out.append(f"quantification {cls.quantification}")
        for s in cls.slots:
            req = "required" if s.required else "optional"
            out.append(f"slot {s.name} {s.role} {iri_token(s.range)} {s.input_mode} {req}")
        for f in cls.pattern.freshes:
            extra = f" item={f.item_class}" if f.item_class else ""
            out.append(f"fresh {f.name}{extra}")
        if cls.subject_node:
            out.append(f"subject-node {cls.subject_node}")
        for name in cls.object_nodes:
            out.append(f"object-node {name}")
        for t in cls.pattern.templates:
            out.append(
                "triple "
                + " ".join(
                    [
                        _node_token_text(t.subject),
                        iri_token(t.predicate),
                        _node_token_text(t.object),
                    ]
                )
            )
        if cls.partial_order:
            out.append("partial-order")
        for fu in cls.follow_ups:
            out.append(f"follow-up {fu.target} when {fu.slot}={iri_token(fu.term)}")
        if cls.display is not None:
            out.append(f"display {cls.display.text}")
        out.append("")

    for item in registry.item_classes.values():
        out.append(f"class item {item.id.label} {iri_token(item.id.iri)}")
        out.append(f"description {item.description}")
        out.append(f"subject-class {iri_token(item.subject_class)}")
        if item.offers:
            out.append("offers " + " ".join(item.offers))
        if item.display is not None:
            out.append(f"display {item.display.text}")
        out.append("")

    for tree in registry.tree_classes.values():
        out.append(f"class tree {tree.id.label} {iri_token(tree.id.iri)}")
        out.append(f"description {tree.description}")
        if tree.relations:
            out.append("relation " + " ".join(tree.relations))
        if tree.display is not None:
            out.append(f"display {tree.display.text}")
        out.append("")

    return "\n".join(out).rstrip() + "\n"


def _node_token_text(node: PatternNode) -> str:
    if isinstance(node, SlotRef):
        return f"${node.name}"
    if isinstance(node, FreshRef):
        return f"@{node.name}"
    return f"<{node.iri.value}>"


# ---------------------------------------------------------------------------
# Binding validation and pattern instantiation
# ---------------------------------------------------------------------------

TermResolver = Callable[[Iri], Optional[str]]


def validate_bindings(
    cls: StatementUnitClass,
    bindings: Dict[str, Term],
    resolver: Optional[TermResolver] = None,
) -> Dict[str, Term]:
    """Check bindings against the class slots; returns normalized bindings.

    Literal values are re-typed to the slot's declared datatype when their
    lexical form parses under it. Raises BindingError listing every failing
    slot.
    """
    problems: Dict[str, str] = {}
    normalized: Dict[str, Term] = {}
    known = {s.name for s in cls.slots}
    for name in bindings:
        if name not in known:
            problems[name] = "unknown slot"
    for spec in cls.slots:
        value = bindings.get(spec.name)
        if value is None:
            if spec.required:
                problems[spec.name] = "required slot not bound"
            continue
        if spec.role in (ROLE_SUBJECT, ROLE_OBJECT):
            if not isinstance(value, Iri):
                problems[spec.name] = "resource slot requires an IRI"
                continue
            if spec.input_mode == "ontology-term" and resolver is not None:
                if resolver(value) is None:
                    problems[spec.name] = f"unresolvable ontology term {value}"
                    continue
            normalized[spec.name] = value
        else:
            if isinstance(value, Iri):
                problems[spec.name] = "literal slot requires a literal"
                continue
            lexical = value.lexical
            if spec.range.value in NUMERIC_DATATYPES:
                try:
                    Decimal(lexical)
                except InvalidOperation:
                    problems[spec.name] = f"not a decimal number: {lexical!r}"
                    continue
            elif spec.range.value == XSD_GYEAR and not _GYEAR_RE.match(lexical):
                problems[spec.name] = f"not a year: {lexical!r}"
                continue
            if value.language is not None:
                normalized[spec.name] = value
            else:
                normalized[spec.name] = Literal(lexical, spec.range)
    if problems:
        raise BindingError(
            f"invalid bindings for {cls.id.label}: "
            + "; ".join(f"{k}: {v}" for k, v in sorted(problems.items())),
            details=problems,
        )
    return normalized


def instantiate_pattern(
    cls: StatementUnitClass,
    bindings: Dict[str, Term],
    minter: IriMinter,
    fresh_override: Optional[Dict[str, Iri]] = None,
) -> Tuple[Dict[str, Iri], List[Triple]]:
    """Expand the class pattern: mint fresh nodes in declaration order, then
    emit one triple per template, in order.

    ``fresh_override`` lets a revision reuse its predecessor's minted nodes so
    successor data-graphs differ only in the changed values.
    """
    fresh_map: Dict[str, Iri] = {}
    for spec in cls.pattern.freshes:
        if fresh_override and spec.name in fresh_override:
            fresh_map[spec.name] = fresh_override[spec.name]
        else:
            fresh_map[spec.name] = minter.mint(NODE_KIND)

    def skippable(node: PatternNode) -> bool:
        # templates naming an unbound optional slot are simply not emitted
        if not isinstance(node, SlotRef) or node.name in bindings:
            return False
        spec = cls.slot(node.name)
        if spec is not None and not spec.required:
            return True
        raise BindingError(
            f"class {cls.id.label}: slot {node.name} unbound at instantiation",
            details={node.name: "unbound"},
        )

    def resolve(node: PatternNode, position: str) -> Term:
        if isinstance(node, FixedIri):
            return node.iri
        if isinstance(node, FreshRef):
            return fresh_map[node.name]
        value = bindings[node.name]
        if position == "subject" and not isinstance(value, Iri):
            raise ValidationError(
                f"class {cls.id.label}: literal bound to subject position ${node.name}"
            )
        return value

    triples: List[Triple] = []
    for t in cls.pattern.templates:
        if skippable(t.subject) or skippable(t.object):
            continue
        subject = resolve(t.subject, "subject")
        obj = resolve(t.object, "object")
        triples.append(Triple(subject, t.predicate, obj))  # type: ignore[arg-type]
    return fresh_map, triples


def unit_subject(cls: StatementUnitClass, bindings: Dict[str, Term], fresh_map: Dict[str, Iri]) -> Iri:
    """The unit's subject resource: the minted subject-node when declared,
    otherwise the value bound to the subject slot."""
    if cls.subject_node is not None:
        return fresh_map[cls.subject_node]
    value = bindings[cls.subject_slot().name]
    assert isinstance(value, Iri)
    return value


def unit_objects(
    cls: StatementUnitClass, bindings: Dict[str, Term], fresh_map: Dict[str, Iri]
) -> List[Term]:
    """Ordered object list: declared object-nodes first (the proposition's
    primary objects, e.g. a minted part), then bound object/literal slots."""
    out: List[Term] = [fresh_map[name] for name in cls.object_nodes]
    for spec in cls.slots:
        if spec.role == ROLE_SUBJECT:
            continue
        value = bindings.get(spec.name)
        if value is not None:
            out.append(value)
    return out
