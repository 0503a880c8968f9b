"""The knowledge-base engine.

Single mutation surface over the quad store and the SUs-graph layer. Every
top-level mutation is appended to an operation log with its timestamp, and
nested operations reuse the outer operation's timestamp, so replaying the log
rebuilds stores, units and snapshots byte-identically.
"""

from __future__ import annotations

import json
import logging
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .errors import (
    BindingError,
    CycleDetected,
    Empty,
    InactiveUnit,
    MissingItem,
    MultiParent,
    NoStatements,
    NotLinked,
    NotPartialOrder,
    NotStatementUnit,
    PartitionViolation,
    TooFew,
    UnknownMember,
    UnknownUnit,
    UnknownVersion,
    ValidationError,
)
from .export import (
    parse_document,
    quad_sort_key,
    render_document,
    su_layer_triples,
)
from .history import (
    EVENT_CREATE,
    EVENT_RESTORE,
    EVENT_SNAPSHOT,
    EVENT_SOFT_DELETE,
    EVENT_UPDATE,
    EditEvent,
    EventLog,
    VersionSnapshot,
)
from .registry import (
    NODE_KIND,
    Registry,
    SlotRef,
    StatementUnitClass,
    StatementUnitClassId,
    instantiate_pattern,
    unit_objects,
    unit_subject,
    validate_bindings,
)
from .store import IriMinter, QuadStore, SystemClock
from .terms import Iri, Literal, Term, Triple, string_literal, term_from_json, term_to_json
from .units import (
    CERTAINTY_LEVELS,
    CertaintyLevel,
    CompoundUnit,
    ITEM_CLASS,
    ITEM_INSTANCE,
    KIND_DATASET,
    KIND_GRANULAR_GROUP,
    KIND_ITEM,
    KIND_ITEM_GROUP,
    KIND_TREE,
    QUANT_ASSERTIONAL,
    STATUS_ACTIVE,
    STATUS_DELETED,
    StatementUnit,
    VOCAB_NS,
)

log = logging.getLogger(__name__)

DEFAULT_ACTOR = "local-user"
DEFAULT_NAMESPACE = "https://w3id.org/semunits/kb/"
CERTAINTY_CLASS = "has-certainty"

IMPORTED_CLASS = StatementUnitClassId(Iri(VOCAB_NS + "ImportedStatement"), "imported")

Unit = Union[StatementUnit, CompoundUnit]


@dataclass(frozen=True)
class OpRecord:
    op: str
    ts: str
    args: dict


@dataclass
class TreeDetection:
    trees: List[CompoundUnit]
    issues: List[Exception]


class KnowledgeBase:
    def __init__(
        self,
        registry: Registry,
        base_namespace: str = DEFAULT_NAMESPACE,
        seed: int = 0,
        clock=None,
        resolver=None,
        log_path: Optional[str] = None,
    ):
        if not base_namespace.endswith(("/", "#")):
            base_namespace += "/"
        self.registry = registry
        self.base = base_namespace
        self.seed = seed
        self.minter = IriMinter(base_namespace, seed)
        self.store = QuadStore(self._owner_exists)
        self.clock = clock or SystemClock()
        self._resolver = resolver
        self.units: Dict[str, Unit] = {}
        self.events = EventLog()
        self.snapshots: Dict[str, VersionSnapshot] = {}
        self.oplog: List[OpRecord] = []
        self._log_path = log_path
        self._depth = 0
        self._ts: Optional[str] = None

    # -- plumbing -----------------------------------------------------------

    def _owner_exists(self, iri: Iri) -> bool:
        return isinstance(self.units.get(iri.value), StatementUnit)

    def resolve_term(self, iri: Iri) -> Optional[str]:
        if self._resolver is None:
            return None
        return self._resolver(iri)

    @contextmanager
    def _op(self, name: str, args: dict, forced_ts: Optional[str] = None):
        top = self._depth == 0
        if top:
            self._ts = forced_ts if forced_ts is not None else self.clock.now()
        self._depth += 1
        try:
            yield self._ts
        except Exception:
            self._depth -= 1
            if top:
                self._ts = None
            raise
        self._depth -= 1
        if top:
            record = OpRecord(name, self._ts, args)
            self.oplog.append(record)
            if self._log_path:
                with open(self._log_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")
                    fh.flush()
            self._ts = None

    # -- lookups ------------------------------------------------------------

    def unit(self, unit_id: Iri) -> Optional[Unit]:
        return self.units.get(unit_id.value)

    def require_unit(self, unit_id: Iri) -> Unit:
        unit = self.units.get(unit_id.value)
        if unit is None:
            raise UnknownUnit(f"no unit {unit_id}")
        return unit

    def _require_statement(self, unit_id: Iri) -> StatementUnit:
        unit = self.require_unit(unit_id)
        if not isinstance(unit, StatementUnit):
            raise NotStatementUnit(f"{unit_id} is not a statement unit")
        return unit

    def active_statements(self) -> List[StatementUnit]:
        return [
            u for u in self.units.values() if isinstance(u, StatementUnit) and u.active
        ]

    def statements_of_class(self, label: str, active_only: bool = True) -> List[StatementUnit]:
        return [
            u
            for u in self.units.values()
            if isinstance(u, StatementUnit)
            and u.class_id.label == label
            and (u.active or not active_only)
        ]

    def statements_with_subject(self, subject: Iri) -> List[StatementUnit]:
        return [u for u in self.active_statements() if u.subject == subject]

    def item_by_subject(self, subject: Iri) -> Optional[CompoundUnit]:
        for u in self.units.values():
            if (
                isinstance(u, CompoundUnit)
                and u.kind == KIND_ITEM
                and u.active
                and u.subject == subject
            ):
                return u
        return None

    def active_items(self) -> List[CompoundUnit]:
        return [
            u
            for u in self.units.values()
            if isinstance(u, CompoundUnit) and u.kind == KIND_ITEM and u.active
        ]

    def item_class_of(self, unit: CompoundUnit):
        if unit.item_class_label:
            return self.registry.item_classes.get(unit.item_class_label)
        return None

    def tree_class_of(self, unit: CompoundUnit):
        if unit.relation_class is None:
            return None
        for tree_cls in self.registry.tree_classes.values():
            if unit.relation_class.label in tree_cls.relations:
                return tree_cls
        return None

    def attached_statements(self, unit: StatementUnit) -> List[StatementUnit]:
        """Active statements bound to a node this unit minted (e.g. the
        measurement attached to a quality); display inlines them."""
        anchors = set(unit.fresh_nodes.values())
        if not anchors:
            return []
        out = []
        for su in self.active_statements():
            if su.id == unit.id:
                continue
            if any(isinstance(v, Iri) and v in anchors for v in su.bindings.values()):
                out.append(su)
        return out

    def member_units(self, unit: CompoundUnit) -> List[Unit]:
        if unit.kind == KIND_ITEM:
            return list(self.statements_with_subject(unit.subject))
        if unit.kind == KIND_ITEM_GROUP:
            items = self.group_items(unit)
            return items + self.group_linking_statements(items)
        resolved = [self.units[m.value] for m in unit.members if m.value in self.units]
        resolved.sort(key=lambda u: u.created_at)
        return resolved

    # -- statement units ----------------------------------------------------

    def create_statement_unit(
        self,
        class_key: str,
        bindings: Dict[str, Term],
        actor: str = DEFAULT_ACTOR,
        quantification: Optional[str] = None,
        fresh_override: Optional[Dict[str, Iri]] = None,
        _ts: Optional[str] = None,
    ) -> StatementUnit:
        cls = self.registry.statement_class(class_key)
        wire = {
            "class": cls.id.label,
            "bindings": {k: term_to_json(v) for k, v in sorted(bindings.items())},
            "actor": actor,
        }
        if quantification:
            wire["quantification"] = quantification
        if fresh_override:
            wire["fresh_override"] = {k: v.value for k, v in sorted(fresh_override.items())}
        with self._op("create_statement", wire, _ts) as ts:
            return self._create_statement(
                cls, bindings, actor, quantification or cls.quantification, fresh_override, ts
            )

    def _create_statement(
        self,
        cls: StatementUnitClass,
        bindings: Dict[str, Term],
        actor: str,
        quantification: str,
        fresh_override: Optional[Dict[str, Iri]],
        ts: str,
        predecessor: Optional[Iri] = None,
    ) -> StatementUnit:
        normalized = validate_bindings(cls, bindings, self._resolver)
        fresh_map, triples = instantiate_pattern(cls, normalized, self.minter, fresh_override)
        unit_id = self.minter.mint("statement")
        unit = StatementUnit(
            id=unit_id,
            class_id=cls.id,
            quantification=quantification,
            subject=unit_subject(cls, normalized, fresh_map),
            objects=tuple(unit_objects(cls, normalized, fresh_map)),
            bindings=dict(normalized),
            fresh_nodes=dict(fresh_map),
            created_at=ts,
            predecessor=predecessor,
        )
        self.units[unit_id.value] = unit
        try:
            self.store.assert_triples(unit_id, triples, ts)
        except Exception:
            del self.units[unit_id.value]
            raise
        self.events.append(actor, ts, unit_id, EVENT_CREATE)
        for name in sorted(normalized):
            self.events.append(
                actor, ts, unit_id, EVENT_CREATE, slot=name, after=normalized[name]
            )
        for spec in cls.pattern.freshes:
            if spec.item_class and self.item_by_subject(fresh_map[spec.name]) is None:
                self._create_item(fresh_map[spec.name], ts, actor, spec.item_class)
        if cls.partial_order:
            self._refresh_trees(cls, ts, actor)
        return unit

    def retract_statement_unit(
        self, unit_id: Iri, actor: str = DEFAULT_ACTOR, _ts: Optional[str] = None
    ) -> StatementUnit:
        with self._op("retract_statement", {"unit": unit_id.value, "actor": actor}, _ts) as ts:
            unit = self._require_statement(unit_id)
            if not unit.active:
                return unit
            self._retract_inner(unit, actor, ts)
            cls = self.registry.statement_classes.get(unit.class_id.label)
            if cls is not None and cls.partial_order:
                self._refresh_trees(cls, ts, actor)
            return unit

    def _retract_inner(self, unit: StatementUnit, actor: str, ts: str):
        self.store.soft_retract(unit.id, ts)
        unit.status = STATUS_DELETED
        self.events.append(actor, ts, unit.id, EVENT_SOFT_DELETE)

    def restore_statement_unit(
        self, unit_id: Iri, actor: str = DEFAULT_ACTOR, _ts: Optional[str] = None
    ) -> StatementUnit:
        with self._op("restore_statement", {"unit": unit_id.value, "actor": actor}, _ts) as ts:
            unit = self._require_statement(unit_id)
            if unit.active:
                return unit
            self.store.restore(unit.id, ts)
            unit.status = STATUS_ACTIVE
            self.events.append(actor, ts, unit.id, EVENT_RESTORE)
            cls = self.registry.statement_classes.get(unit.class_id.label)
            if cls is not None and cls.partial_order:
                self._refresh_trees(cls, ts, actor)
            return unit

    def update_slot(
        self,
        unit_id: Iri,
        slot: str,
        value: Term,
        actor: str = DEFAULT_ACTOR,
        _ts: Optional[str] = None,
    ) -> StatementUnit:
        wire = {
            "unit": unit_id.value,
            "slot": slot,
            "value": term_to_json(value),
            "actor": actor,
        }
        with self._op("update_slot", wire, _ts) as ts:
            unit = self._require_statement(unit_id)
            if not unit.active:
                raise InactiveUnit(f"{unit_id} is soft-deleted")
            if unit.class_id.label not in self.registry.statement_classes:
                raise ValidationError(f"{unit_id} has no registry class; cannot update")
            cls = self.registry.statement_class(unit.class_id.label)
            if cls.slot(slot) is None:
                raise BindingError(
                    f"class {cls.id.label} has no slot {slot!r}", details={slot: "unknown slot"}
                )
            new_bindings = dict(unit.bindings)
            new_bindings[slot] = value
            normalized = validate_bindings(cls, new_bindings, self._resolver)
            if normalized.get(slot) == unit.bindings.get(slot):
                return unit
            before = unit.bindings.get(slot)
            self.store.soft_retract(unit.id, ts)
            unit.status = STATUS_DELETED
            try:
                successor = self._create_statement(
                    cls,
                    normalized,
                    actor,
                    unit.quantification,
                    dict(unit.fresh_nodes),
                    ts,
                    predecessor=unit.id,
                )
            except Exception:
                self.store.restore(unit.id, ts)
                unit.status = STATUS_ACTIVE
                raise
            unit.successor = successor.id
            self.events.append(
                actor, ts, unit.id, EVENT_UPDATE, slot=slot, before=before,
                after=normalized[slot],
            )
            return successor

    # -- certainty ----------------------------------------------------------

    def attach_certainty(
        self,
        target_id: Iri,
        level: CertaintyLevel,
        actor: str = DEFAULT_ACTOR,
        _ts: Optional[str] = None,
    ) -> StatementUnit:
        wire = {
            "target": target_id.value,
            "level": level.level,
            "note": level.note,
            "actor": actor,
        }
        with self._op("attach_certainty", wire, _ts) as ts:
            target = self._require_statement(target_id)
            if CERTAINTY_CLASS not in self.registry.statement_classes:
                raise ValidationError(f"registry ships no {CERTAINTY_CLASS} class")
            level_p, _ = self._certainty_predicates()
            # retract whichever unit owns the current level triple, so the
            # replace semantics hold even for units recreated by an import
            for triple, owner in list(self.store.triples_with_subject(target.id)):
                if triple.predicate != level_p:
                    continue
                holder = self.units.get(owner.value)
                if isinstance(holder, StatementUnit) and holder.active:
                    self._retract_inner(holder, actor, ts)
            bindings: Dict[str, Term] = {"statement": target.id, "level": level.term()}
            if level.note:
                bindings["note"] = string_literal(level.note)
            cls = self.registry.statement_class(CERTAINTY_CLASS)
            return self._create_statement(cls, bindings, actor, QUANT_ASSERTIONAL, None, ts)

    def _certainty_predicates(self) -> Tuple[Optional[Iri], Optional[Iri]]:
        cls = self.registry.statement_classes.get(CERTAINTY_CLASS)
        if cls is None:
            return None, None
        level_p = note_p = None
        for t in cls.pattern.templates:
            if isinstance(t.object, SlotRef):
                if t.object.name == "level":
                    level_p = t.predicate
                elif t.object.name == "note":
                    note_p = t.predicate
        return level_p, note_p

    def certainty_of(self, unit_id: Iri) -> Optional[CertaintyLevel]:
        # read off the data graph rather than unit bindings so certainty
        # attached before an export round-trip is still recovered after it
        level_p, note_p = self._certainty_predicates()
        if level_p is None:
            return None
        level: Optional[Iri] = None
        note: Optional[str] = None
        for triple, _owner in self.store.triples_with_subject(unit_id):
            if triple.predicate == level_p and isinstance(triple.object, Iri):
                level = triple.object
            elif triple.predicate == note_p and isinstance(triple.object, Literal):
                note = triple.object.lexical
        if level is None:
            return None
        return CertaintyLevel.from_term(level, note)

    # -- compound units -----------------------------------------------------

    def _create_item(
        self, subject: Iri, ts: str, actor: str, class_label: Optional[str] = None
    ) -> CompoundUnit:
        item = CompoundUnit(
            id=self.minter.mint("item"),
            kind=KIND_ITEM,
            subject=subject,
            item_kind=ITEM_INSTANCE if subject.value.startswith(self.base) else ITEM_CLASS,
            members={su.id for su in self.statements_with_subject(subject)},
            item_class_label=class_label,
            created_at=ts,
        )
        self.units[item.id.value] = item
        self.events.append(actor, ts, item.id, EVENT_CREATE)
        return item

    def ensure_item_unit(
        self,
        subject: Iri,
        class_label: Optional[str] = None,
        actor: str = DEFAULT_ACTOR,
        _ts: Optional[str] = None,
    ) -> CompoundUnit:
        wire = {"subject": subject.value, "class": class_label, "actor": actor}
        with self._op("ensure_item", wire, _ts) as ts:
            item = self.item_by_subject(subject)
            if item is not None:
                item.members = {su.id for su in self.statements_with_subject(subject)}
                if class_label and not item.item_class_label:
                    item.item_class_label = class_label
                return item
            if not self.statements_with_subject(subject):
                raise NoStatements(f"no active statements with subject {subject}")
            return self._create_item(subject, ts, actor, class_label)

    def _linking_statements(self, subjects: Set[Iri]) -> List[StatementUnit]:
        out = []
        for su in self.active_statements():
            if su.subject not in subjects:
                continue
            if any(
                isinstance(o, Iri) and o in subjects and o != su.subject
                for o in su.objects
            ):
                out.append(su)
        return out

    def form_item_group(
        self,
        item_ids: Sequence[Iri],
        actor: str = DEFAULT_ACTOR,
        _ts: Optional[str] = None,
    ) -> CompoundUnit:
        wire = {"items": [i.value for i in item_ids], "actor": actor}
        with self._op("form_group", wire, _ts) as ts:
            items: List[CompoundUnit] = []
            for iid in item_ids:
                unit = self.require_unit(iid)
                if not isinstance(unit, CompoundUnit) or unit.kind != KIND_ITEM:
                    raise ValidationError(f"{iid} is not an item unit")
                items.append(unit)
            if len(items) < 2:
                raise TooFew("an item group needs at least two item units")
            subjects = {it.subject for it in items}
            linking = self._linking_statements(subjects)
            parent: Dict[str, str] = {}

            def find(x: str) -> str:
                while parent.setdefault(x, x) != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for su in linking:
                for o in su.objects:
                    if isinstance(o, Iri) and o in subjects:
                        parent[find(su.subject.value)] = find(o.value)
            roots = {find(it.subject.value) for it in items}
            if len(roots) > 1:
                raise NotLinked("items are not connected by any linking statement")
            group = CompoundUnit(
                id=self.minter.mint("group"),
                kind=KIND_ITEM_GROUP,
                members={it.id for it in items} | {su.id for su in linking},
                subject=items[0].subject,
                created_at=ts,
            )
            self.units[group.id.value] = group
            self.events.append(actor, ts, group.id, EVENT_CREATE)
            return group

    def group_items(self, group: CompoundUnit) -> List[CompoundUnit]:
        """Effective item members: the connected component (over active
        linking statements) containing the group's subject item, in first-seen
        order along creation-ordered links."""
        start = self.item_by_subject(group.subject) if group.subject else None
        if start is None:
            return []
        items_by_subject = {it.subject.value: it for it in self.active_items()}
        neighbors: Dict[str, List[Tuple[str, str]]] = {}
        for su in self.active_statements():
            if su.subject.value not in items_by_subject:
                continue
            for o in su.objects:
                if (
                    isinstance(o, Iri)
                    and o.value in items_by_subject
                    and o.value != su.subject.value
                ):
                    neighbors.setdefault(su.subject.value, []).append((su.created_at, o.value))
                    neighbors.setdefault(o.value, []).append((su.created_at, su.subject.value))
        seen = {start.subject.value}
        order = [start]
        queue = [start.subject.value]
        while queue:
            current = queue.pop(0)
            for _, nxt in sorted(neighbors.get(current, [])):
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(items_by_subject[nxt])
                    queue.append(nxt)
        return order

    def group_linking_statements(self, items: List[CompoundUnit]) -> List[StatementUnit]:
        return self._linking_statements({it.subject for it in items})

    def create_dataset_unit(
        self,
        members: Sequence[Iri],
        label: str,
        actor: str = DEFAULT_ACTOR,
        _ts: Optional[str] = None,
    ) -> CompoundUnit:
        wire = {"members": [m.value for m in members], "label": label, "actor": actor}
        with self._op("create_dataset", wire, _ts) as ts:
            if not members:
                raise Empty("a dataset unit needs at least one member")
            for m in members:
                if m.value not in self.units:
                    raise UnknownMember(f"no unit {m}")
            ds = CompoundUnit(
                id=self.minter.mint("dataset"),
                kind=KIND_DATASET,
                members=set(members),
                label=label,
                created_at=ts,
            )
            self.units[ds.id.value] = ds
            self.events.append(actor, ts, ds.id, EVENT_CREATE)
            return ds

    # -- granularity trees ---------------------------------------------------

    def detect_granularity_trees(
        self, class_key: str, actor: str = DEFAULT_ACTOR, _ts: Optional[str] = None
    ) -> TreeDetection:
        cls = self.registry.statement_class(class_key)
        if not cls.partial_order:
            raise NotPartialOrder(f"class {cls.id.label} is not flagged partial-order")
        with self._op("detect_trees", {"class": cls.id.label, "actor": actor}, _ts) as ts:
            return self._refresh_trees(cls, ts, actor)

    @staticmethod
    def _part_of(su: StatementUnit) -> Optional[Iri]:
        for o in su.objects:
            if isinstance(o, Iri):
                return o
        return None

    def _refresh_trees(self, cls: StatementUnitClass, ts: str, actor: str) -> TreeDetection:
        stmts = [
            su for su in self.statements_of_class(cls.id.label) if self._part_of(su) is not None
        ]
        stmts.sort(key=lambda su: su.id.value)
        parent: Dict[str, str] = {}

        def find(x: str) -> str:
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: str, b: str):
            parent[find(a)] = find(b)

        for su in stmts:
            union("s:" + su.id.value, "n:" + su.subject.value)
            union("s:" + su.id.value, "n:" + self._part_of(su).value)
        components: Dict[str, List[StatementUnit]] = {}
        for su in stmts:
            components.setdefault(find("s:" + su.id.value), []).append(su)

        issues: List[Exception] = []
        valid: List[Tuple[Set[Iri], Iri, List[StatementUnit]]] = []
        for comp in components.values():
            if len(comp) < 2:
                continue
            nodes: Set[Iri] = set()
            parents: Dict[Iri, Set[Iri]] = {}
            children: Dict[Iri, List[Iri]] = {}
            for su in comp:
                whole, part = su.subject, self._part_of(su)
                nodes.add(whole)
                nodes.add(part)
                parents.setdefault(part, set()).add(whole)
                children.setdefault(whole, []).append(part)
            multi = sorted(n.value for n, ps in parents.items() if len(ps) > 1)
            if multi:
                issues.append(
                    MultiParent("node has more than one parent", tuple(multi))
                )
                continue
            roots = [n for n in nodes if n not in parents]
            if not roots:
                issues.append(
                    CycleDetected(
                        "relation component has no root",
                        tuple(sorted(n.value for n in nodes)),
                    )
                )
                continue
            if len(roots) > 1:
                # disconnected forest cannot happen within one component
                continue
            root = roots[0]
            reached = {root}
            stack = [root]
            while stack:
                current = stack.pop()
                for child in children.get(current, []):
                    if child not in reached:
                        reached.add(child)
                        stack.append(child)
            if reached != nodes:
                cycle_nodes = tuple(sorted(n.value for n in nodes - reached))
                issues.append(
                    CycleDetected("relation component contains a cycle", cycle_nodes)
                )
                continue
            valid.append(({su.id for su in comp}, root, comp))

        existing = [
            u
            for u in self.units.values()
            if isinstance(u, CompoundUnit)
            and u.kind == KIND_TREE
            and u.active
            and u.relation_class == cls.id
        ]
        matched: Set[str] = set()
        trees: List[CompoundUnit] = []
        for member_ids, root, comp in valid:
            hit = None
            for tu in existing:
                if tu.id.value in matched:
                    continue
                if tu.members & member_ids or tu.subject == root:
                    hit = tu
                    break
            if hit is not None:
                hit.members = set(member_ids)
                hit.subject = root
                matched.add(hit.id.value)
                trees.append(hit)
            else:
                tu = CompoundUnit(
                    id=self.minter.mint("tree"),
                    kind=KIND_TREE,
                    members=set(member_ids),
                    subject=root,
                    relation_class=cls.id,
                    created_at=ts,
                )
                self.units[tu.id.value] = tu
                self.events.append(actor, ts, tu.id, EVENT_CREATE)
                matched.add(tu.id.value)
                trees.append(tu)
        for tu in existing:
            if tu.id.value not in matched:
                tu.status = STATUS_DELETED
                self.events.append(actor, ts, tu.id, EVENT_SOFT_DELETE)
        return TreeDetection(trees=trees, issues=issues)

    def active_trees(self, class_label: Optional[str] = None) -> List[CompoundUnit]:
        # accepts either a relation class label or a tree class label, which
        # widens to every relation the tree class declares
        labels: Optional[Set[str]] = None
        if class_label is not None:
            tree_cls = self.registry.tree_classes.get(class_label)
            labels = set(tree_cls.relations) if tree_cls else {class_label}
        out = []
        for u in self.units.values():
            if isinstance(u, CompoundUnit) and u.kind == KIND_TREE and u.active:
                if labels is None or (
                    u.relation_class is not None and u.relation_class.label in labels
                ):
                    out.append(u)
        return out

    def derive_granular_item_group(
        self, tree_id: Iri, actor: str = DEFAULT_ACTOR, _ts: Optional[str] = None
    ) -> CompoundUnit:
        with self._op("derive_granular", {"tree": tree_id.value, "actor": actor}, _ts) as ts:
            tree = self.require_unit(tree_id)
            if not isinstance(tree, CompoundUnit) or tree.kind != KIND_TREE:
                raise ValidationError(f"{tree_id} is not a granularity tree unit")
            member_stmts = [
                self.units[m.value]
                for m in sorted(tree.members, key=lambda i: i.value)
                if m.value in self.units
            ]
            nodes: List[Iri] = []
            for su in member_stmts:
                for node in (su.subject, self._part_of(su)):
                    if node is not None and node not in nodes:
                        nodes.append(node)
            node_groups: List[CompoundUnit] = []
            for node in nodes:
                item = self.item_by_subject(node)
                if item is None:
                    if not self.statements_with_subject(node):
                        raise MissingItem(f"tree node {node} has no item and no statements")
                    item = self._create_item(node, ts, actor)
                linked_items: List[CompoundUnit] = []
                linking: List[StatementUnit] = []
                for su in self.active_statements():
                    if su.subject == node:
                        for o in su.objects:
                            if isinstance(o, Iri) and o != node:
                                other = self.item_by_subject(o)
                                if other is not None and other not in linked_items:
                                    linked_items.append(other)
                                    linking.append(su)
                    elif any(isinstance(o, Iri) and o == node for o in su.objects):
                        other = self.item_by_subject(su.subject)
                        if other is not None and other not in linked_items:
                            linked_items.append(other)
                            linking.append(su)
                group = CompoundUnit(
                    id=self.minter.mint("group"),
                    kind=KIND_ITEM_GROUP,
                    members={item.id}
                    | {it.id for it in linked_items}
                    | {su.id for su in linking},
                    subject=node,
                    created_at=ts,
                )
                self.units[group.id.value] = group
                self.events.append(actor, ts, group.id, EVENT_CREATE)
                node_groups.append(group)
            gig = CompoundUnit(
                id=self.minter.mint("granular"),
                kind=KIND_GRANULAR_GROUP,
                members={tree.id} | {g.id for g in node_groups},
                subject=tree.subject,
                relation_class=tree.relation_class,
                created_at=ts,
            )
            self.units[gig.id.value] = gig
            self.events.append(actor, ts, gig.id, EVENT_CREATE)
            return gig

    # -- data graphs ---------------------------------------------------------

    def compound_data_graph(self, unit_id: Iri) -> Set[Triple]:
        unit = self.require_unit(unit_id)
        if isinstance(unit, StatementUnit):
            raise ValidationError(f"{unit_id} is a statement unit, not a compound")
        return self._data_graph_closure(unit, set())

    def _data_graph_closure(self, unit: Unit, seen: Set[str]) -> Set[Triple]:
        if unit.id.value in seen:
            return set()
        seen.add(unit.id.value)
        if isinstance(unit, StatementUnit):
            return set(self.store.data_graph_of(unit.id))
        out: Set[Triple] = set()
        for member in self.member_units(unit):
            out |= self._data_graph_closure(member, seen)
        return out

    # -- history -------------------------------------------------------------

    def revision_chain(self, unit_id: Iri) -> List[StatementUnit]:
        unit = self.units.get(unit_id.value)
        if not isinstance(unit, StatementUnit):
            return []
        root = unit
        while root.predecessor is not None and root.predecessor.value in self.units:
            root = self.units[root.predecessor.value]
        chain = [root]
        while chain[-1].successor is not None and chain[-1].successor.value in self.units:
            chain.append(self.units[chain[-1].successor.value])
        return chain

    def history_of(self, unit_id: Iri, slot: Optional[str] = None) -> List[EditEvent]:
        if unit_id.value not in self.units and not self.events.has_unit(unit_id):
            raise UnknownUnit(f"no unit {unit_id} (and none ever existed)")
        chain = self.revision_chain(unit_id) or [self.require_unit(unit_id)]
        events: List[EditEvent] = []
        for u in chain:
            events.extend(self.events.for_unit(u.id, slot))
        events.sort(key=lambda e: e.seq)
        return events

    # -- snapshots -----------------------------------------------------------

    def _snapshot_closure(self, unit: Unit) -> List[Unit]:
        selected: Dict[str, Unit] = {}
        frontier: List[Unit] = [unit]
        while frontier:
            u = frontier.pop(0)
            if u.id.value in selected:
                continue
            selected[u.id.value] = u
            if isinstance(u, CompoundUnit):
                if u.kind == KIND_ITEM and u.subject is not None:
                    u.members = {su.id for su in self.statements_with_subject(u.subject)}
                for member in self.member_units(u):
                    frontier.append(member)
                for m in u.members:
                    if m.value in self.units:
                        frontier.append(self.units[m.value])
            else:
                frontier.extend(self.statements_with_subject(u.id))
                frontier.extend(self.statements_with_subject(u.subject))
                for node in u.fresh_nodes.values():
                    frontier.extend(self.statements_with_subject(node))
        return sorted(selected.values(), key=lambda x: x.id.value)

    def create_snapshot(
        self, unit_id: Iri, actor: str = DEFAULT_ACTOR, _ts: Optional[str] = None
    ) -> VersionSnapshot:
        with self._op("snapshot", {"unit": unit_id.value, "actor": actor}, _ts) as ts:
            unit = self.require_unit(unit_id)
            closure = self._snapshot_closure(unit)
            version_id = self.minter.mint("version")
            data: List[Tuple[Triple, Iri]] = []
            for u in closure:
                if isinstance(u, StatementUnit):
                    for triple in self.store.data_graph_of(u.id):
                        data.append((triple, u.id))
            data.sort(key=quad_sort_key)
            su_triples = tuple(su_layer_triples(closure))
            canonical = self._render_snapshot(version_id, unit.id, ts, data, su_triples)
            snap = VersionSnapshot(
                id=version_id,
                target=unit.id,
                created=ts,
                frozen_data_graph=tuple(data),
                frozen_su_graph=su_triples,
                canonical_bytes=canonical.encode("utf-8"),
            )
            self.snapshots[version_id.value] = snap
            self.events.append(actor, ts, unit.id, EVENT_SNAPSHOT)
            return snap

    def _render_snapshot(
        self,
        version_id: Iri,
        target: Iri,
        ts: str,
        data: List[Tuple[Triple, Iri]],
        su_triples: Tuple[Triple, ...],
    ) -> str:
        prefixed: List[Tuple[Triple, Iri]] = []
        for triple, owner in data:
            suffix = (
                owner.value[len(self.base):]
                if owner.value.startswith(self.base)
                else "ext/" + owner.local_name()
            )
            prefixed.append((triple, Iri(f"{version_id.value}/{suffix}")))
        su_graph = Iri(f"{version_id.value}/sus")
        prefixed.extend((t, su_graph) for t in su_triples)
        return render_document(
            prefixed,
            self.seed,
            ts,
            self.base,
            extra_header=[f"version: {version_id.value}", f"target: {target.value}"],
        )

    def resolve_snapshot(self, version_id: Iri) -> VersionSnapshot:
        snap = self.snapshots.get(version_id.value)
        if snap is None:
            raise UnknownVersion(f"no version {version_id}")
        return snap

    # -- export / import ------------------------------------------------------

    def export_quads(self, scope: Optional[Iri] = None, include_deleted: bool = False) -> str:
        if scope is None:
            quads = [(rec.triple, rec.owner) for rec in self.store.active_records()]
            if include_deleted:
                quads.extend(
                    (rec.triple, rec.owner)
                    for rec in self.store.all_records()
                    if not rec.active
                )
        else:
            unit = self.require_unit(scope)
            owners: Set[str] = set()
            stack: List[Unit] = [unit]
            seen: Set[str] = set()
            while stack:
                u = stack.pop()
                if u.id.value in seen:
                    continue
                seen.add(u.id.value)
                if isinstance(u, StatementUnit):
                    owners.add(u.id.value)
                else:
                    stack.extend(self.member_units(u))
            quads = [
                (rec.triple, rec.owner)
                for rec in self.store.active_records()
                if rec.owner.value in owners
            ]
        return render_document(quads, self.seed, self.store.content_timestamp(), self.base)

    def export_nanopub(self, unit_id: Iri):
        from .export import (
            NP_HAS_ASSERTION,
            NP_HAS_PROVENANCE,
            NP_HAS_PUBINFO,
            NP_NANOPUB,
            NanopubBundle,
            P_ATTRIBUTED,
            P_CERTAINTY,
            P_CREATED,
            P_GENERATED,
            P_INSTANTIATES,
            P_REVISION_OF,
            P_TYPE,
        )
        from .terms import XSD_DATETIME

        unit = self._require_statement(unit_id)
        if not unit.active:
            raise InactiveUnit(f"{unit_id} is soft-deleted")
        bundle_stub = NanopubBundle(unit.id, (), (), (), ())
        assertion_iri = bundle_stub.graph_iri("assertion")
        assertion = tuple(
            sorted(self.store.data_graph_of(unit.id), key=lambda t: t.sort_key())
        )
        events = self.events.for_unit(unit.id)
        actor = events[0].actor if events else DEFAULT_ACTOR
        provenance = [
            Triple(assertion_iri, P_GENERATED, Literal(unit.created_at, Iri(XSD_DATETIME))),
            Triple(assertion_iri, P_ATTRIBUTED, string_literal(actor)),
        ]
        if unit.predecessor is not None:
            provenance.append(
                Triple(
                    assertion_iri,
                    P_REVISION_OF,
                    Iri(unit.predecessor.value + "/assertion"),
                )
            )
        pubinfo = [
            Triple(unit.id, P_INSTANTIATES, unit.class_id.iri),
            Triple(unit.id, P_CREATED, string_literal(unit.created_at)),
        ]
        certainty = self.certainty_of(unit.id)
        if certainty is not None:
            pubinfo.append(Triple(unit.id, P_CERTAINTY, certainty.term()))
        head = (
            Triple(unit.id, P_TYPE, NP_NANOPUB),
            Triple(unit.id, NP_HAS_ASSERTION, assertion_iri),
            Triple(unit.id, NP_HAS_PROVENANCE, bundle_stub.graph_iri("provenance")),
            Triple(unit.id, NP_HAS_PUBINFO, bundle_stub.graph_iri("pubinfo")),
        )
        return NanopubBundle(
            unit=unit.id,
            head=head,
            assertion=assertion,
            provenance=tuple(provenance),
            pubinfo=tuple(pubinfo),
        )

    def import_quads(self, text: str, _ts: Optional[str] = None) -> dict:
        with self._op("import_quads", {"text": text}, _ts) as ts:
            meta, rows = parse_document(text)
            doc_ts = meta.get("exported") or ts
            claimed: Dict[Triple, str] = {}
            for triple, graph, lineno in rows:
                prior = claimed.get(triple)
                if prior is not None and prior != graph.value:
                    raise PartitionViolation(
                        f"triple owned by two graphs in document (line {lineno})",
                        details={"graphs": [prior, graph.value]},
                    )
                claimed[triple] = graph.value
                existing = self.store.owner_of(triple)
                if existing is not None and existing.value != graph.value:
                    raise PartitionViolation(
                        f"imported triple already owned by {existing.value} (line {lineno})",
                        details={"owner": existing.value, "graph": graph.value},
                    )
            by_graph: Dict[str, List[Triple]] = {}
            graph_order: List[Iri] = []
            for triple, graph, _ in sorted(rows, key=lambda r: quad_sort_key((r[0], r[1]))):
                if graph.value not in by_graph:
                    by_graph[graph.value] = []
                    graph_order.append(graph)
                by_graph[graph.value].append(triple)
                for iri in (graph, triple.subject, triple.predicate, triple.object):
                    if isinstance(iri, Iri):
                        self.minter.bump_past(iri)
            created = 0
            for graph in graph_order:
                triples = by_graph[graph.value]
                owner = self.units.get(graph.value)
                if owner is None:
                    unit = StatementUnit(
                        id=graph,
                        class_id=IMPORTED_CLASS,
                        quantification=QUANT_ASSERTIONAL,
                        subject=triples[0].subject,
                        objects=(triples[0].object,),
                        bindings={},
                        fresh_nodes={},
                        created_at=doc_ts,
                    )
                    self.units[graph.value] = unit
                    self.events.append(DEFAULT_ACTOR, doc_ts, graph, EVENT_CREATE)
                    created += 1
                elif not isinstance(owner, StatementUnit):
                    raise ValidationError(f"graph label {graph} names a non-statement unit")
                self.store.assert_triples(graph, triples, doc_ts)
            return {
                "units_created": created,
                "quads_imported": len(rows),
                "timestamp": doc_ts,
            }

    # -- node minting ----------------------------------------------------------

    def mint_node(self, kind: str = NODE_KIND, _ts: Optional[str] = None) -> Iri:
        with self._op("mint", {"kind": kind}, _ts):
            return self.minter.mint(kind)

    # -- replay -----------------------------------------------------------------

    def apply_op(self, record: Union[OpRecord, dict]):
        if isinstance(record, dict):
            record = OpRecord(record["op"], record["ts"], record["args"])
        name, ts, a = record.op, record.ts, record.args
        if name == "create_statement":
            self.create_statement_unit(
                a["class"],
                {k: term_from_json(v) for k, v in a["bindings"].items()},
                actor=a.get("actor", DEFAULT_ACTOR),
                quantification=a.get("quantification"),
                fresh_override={k: Iri(v) for k, v in a["fresh_override"].items()}
                if a.get("fresh_override")
                else None,
                _ts=ts,
            )
        elif name == "retract_statement":
            self.retract_statement_unit(Iri(a["unit"]), a.get("actor", DEFAULT_ACTOR), _ts=ts)
        elif name == "restore_statement":
            self.restore_statement_unit(Iri(a["unit"]), a.get("actor", DEFAULT_ACTOR), _ts=ts)
        elif name == "update_slot":
            self.update_slot(
                Iri(a["unit"]), a["slot"], term_from_json(a["value"]),
                a.get("actor", DEFAULT_ACTOR), _ts=ts,
            )
        elif name == "attach_certainty":
            self.attach_certainty(
                Iri(a["target"]),
                CertaintyLevel(a["level"], a.get("note")),
                a.get("actor", DEFAULT_ACTOR),
                _ts=ts,
            )
        elif name == "ensure_item":
            self.ensure_item_unit(
                Iri(a["subject"]), a.get("class"), a.get("actor", DEFAULT_ACTOR), _ts=ts
            )
        elif name == "form_group":
            self.form_item_group(
                [Iri(v) for v in a["items"]], a.get("actor", DEFAULT_ACTOR), _ts=ts
            )
        elif name == "create_dataset":
            self.create_dataset_unit(
                [Iri(v) for v in a["members"]], a["label"],
                a.get("actor", DEFAULT_ACTOR), _ts=ts,
            )
        elif name == "detect_trees":
            self.detect_granularity_trees(a["class"], a.get("actor", DEFAULT_ACTOR), _ts=ts)
        elif name == "derive_granular":
            self.derive_granular_item_group(
                Iri(a["tree"]), a.get("actor", DEFAULT_ACTOR), _ts=ts
            )
        elif name == "snapshot":
            self.create_snapshot(Iri(a["unit"]), a.get("actor", DEFAULT_ACTOR), _ts=ts)
        elif name == "import_quads":
            self.import_quads(a["text"], _ts=ts)
        elif name == "mint":
            self.mint_node(a.get("kind", NODE_KIND), _ts=ts)
        else:
            raise ValidationError(f"unknown operation {name!r} in log")

    @classmethod
    def replay(
        cls,
        records: Iterable[Union[OpRecord, dict]],
        registry: Registry,
        base_namespace: str = DEFAULT_NAMESPACE,
        seed: int = 0,
        resolver=None,
    ) -> "KnowledgeBase":
        kb = cls(registry, base_namespace, seed, resolver=resolver)
        for record in records:
            kb.apply_op(record)
        return kb


def read_oplog(path: str) -> List[OpRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                data = json.loads(line)
                records.append(OpRecord(data["op"], data["ts"], data["args"]))
    return records
