import pytest

from semantic_units.errors import (
    CycleDetected,
    Empty,
    InactiveUnit,
    MultiParent,
    NoStatements,
    NotLinked,
    NotPartialOrder,
    PartitionViolation,
    TooFew,
    UnknownMember,
    UnknownUnit,
    ValidationError,
    BindingError,
)
from semantic_units.terms import Iri, decimal_literal, string_literal
from semantic_units.units import (
    KIND_ITEM,
    KIND_TREE,
    CertaintyLevel,
    CompoundUnit,
    StatementUnit,
)
from semantic_units.registry import StatementUnitClassId

from conftest import (
    DIMENSIONLESS,
    HUMAN_TERM,
    MASS_TERM,
    ORGANISM_TERM,
    POPULATION_TERM,
    R0_TERM,
    VIRUS_TERM,
    WEIGHT_TERM,
)

CLS = StatementUnitClassId(Iri("http://ex.org/C"), "c")


class TestUnitModel:
    def test_statement_unit_needs_objects(self):
        with pytest.raises(ValidationError):
            StatementUnit(
                id=Iri("http://ex.org/s1"),
                class_id=CLS,
                quantification="assertional",
                subject=Iri("http://ex.org/a"),
                objects=(),
                bindings={},
                fresh_nodes={},
            )

    def test_statement_unit_validates_quantification(self):
        with pytest.raises(ValidationError):
            StatementUnit(
                id=Iri("http://ex.org/s1"),
                class_id=CLS,
                quantification="sometimes",
                subject=Iri("http://ex.org/a"),
                objects=(string_literal("x"),),
                bindings={},
                fresh_nodes={},
            )

    def test_item_requires_subject(self):
        with pytest.raises(ValidationError):
            CompoundUnit(id=Iri("http://ex.org/i1"), kind=KIND_ITEM)
        with pytest.raises(ValidationError):
            CompoundUnit(id=Iri("http://ex.org/i1"), kind="blob")

    def test_certainty_level_round_trip(self):
        level = CertaintyLevel("likely", "hedged in the abstract")
        assert CertaintyLevel.from_term(level.term(), level.note) == level
        with pytest.raises(ValidationError):
            CertaintyLevel("definitely")
        with pytest.raises(ValidationError):
            CertaintyLevel.from_term(Iri("http://ex.org/likely"))


class TestStatementLifecycle:
    def test_create_mints_freshes_and_owns_triples(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-quality", {"bearer": pop, "quality-class": R0_TERM}
        )
        assert su.active
        assert set(su.fresh_nodes) == {"q"}
        graph = kb.store.data_graph_of(su.id)
        assert len(graph) == 3
        assert all(kb.store.owner_of(t) == su.id for t in graph)
        # unit subject stays the bearer; the minted quality is the object
        assert su.subject == pop
        assert su.fresh_nodes["q"] in {o for o in su.objects if isinstance(o, Iri)}

    def test_quality_creates_item_for_fresh_node(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-quality", {"bearer": pop, "quality-class": R0_TERM}
        )
        item = kb.item_by_subject(su.fresh_nodes["q"])
        assert item is not None
        assert item.item_class_label == "quality"

    def test_retract_then_restore(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-quality", {"bearer": pop, "quality-class": R0_TERM}
        )
        kb.retract_statement_unit(su.id)
        assert not kb.unit(su.id).active
        assert kb.store.data_graph_of(su.id) == set()
        kb.retract_statement_unit(su.id)  # idempotent
        kb.restore_statement_unit(su.id)
        assert kb.unit(su.id).active
        assert len(kb.store.data_graph_of(su.id)) == 3

    def test_unknown_unit_raises(self, kb):
        with pytest.raises(UnknownUnit):
            kb.require_unit(Iri("https://w3id.org/semunits/kb/statement/999999"))

    def test_update_slot_spawns_successor(self, kb):
        pop = kb.mint_node()
        q = kb.create_statement_unit(
            "has-quality", {"bearer": pop, "quality-class": R0_TERM}
        )
        m = kb.create_statement_unit(
            "R0-measurement-with-CI",
            {
                "quality": q.fresh_nodes["q"],
                "value": decimal_literal("2.2"),
                "unit": DIMENSIONLESS,
                "level": decimal_literal("0.95"),
                "low": decimal_literal("1.9"),
                "high": decimal_literal("2.6"),
            },
        )
        successor = kb.update_slot(m.id, "value", decimal_literal("2.3"))
        assert successor.id != m.id
        assert successor.predecessor == m.id
        assert kb.unit(m.id).successor == successor.id
        assert not kb.unit(m.id).active
        # revision reuses the minted nodes, so only the value triple changed
        assert successor.fresh_nodes == m.fresh_nodes
        before = {r.triple for r in kb.store.all_records() if r.owner == m.id}
        changed = kb.store.data_graph_of(successor.id) - before
        lexicals = {t.object.lexical for t in changed}
        assert lexicals == {"2.3"}

    def test_update_noop_returns_same_unit(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-label", {"subject": pop, "label": string_literal("alpha")}
        )
        again = kb.update_slot(su.id, "label", string_literal("alpha"))
        assert again is su
        assert su.active

    def test_update_unknown_slot(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-label", {"subject": pop, "label": string_literal("alpha")}
        )
        with pytest.raises(BindingError):
            kb.update_slot(su.id, "nope", string_literal("x"))

    def test_update_inactive_rejected(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-label", {"subject": pop, "label": string_literal("alpha")}
        )
        kb.retract_statement_unit(su.id)
        with pytest.raises(InactiveUnit):
            kb.update_slot(su.id, "label", string_literal("beta"))

    def test_partition_holds_across_units(self, kb):
        pop = kb.mint_node()
        kb.create_statement_unit(
            "instance-of", {"subject": pop, "class": POPULATION_TERM}
        )
        with pytest.raises(PartitionViolation):
            kb.create_statement_unit(
                "instance-of", {"subject": pop, "class": POPULATION_TERM}
            )
        # rolled back: the failed unit must not linger half-registered
        assert all(u.active for u in kb.active_statements())

    def test_certainty_attach_and_replace(self, kb):
        pop = kb.mint_node()
        su = kb.create_statement_unit(
            "has-quality", {"bearer": pop, "quality-class": R0_TERM}
        )
        first = kb.attach_certainty(su.id, CertaintyLevel("possible"))
        assert first.subject == su.id
        assert kb.certainty_of(su.id) == CertaintyLevel("possible")
        kb.attach_certainty(su.id, CertaintyLevel("likely", "replicated twice"))
        assert kb.certainty_of(su.id) == CertaintyLevel("likely", "replicated twice")
        assert not kb.unit(first.id).active
        assert kb.certainty_of(pop) is None


class TestItemsAndGroups:
    def seed_entities(self, kb):
        a = kb.mint_node()
        b = kb.mint_node()
        kb.create_statement_unit("instance-of", {"subject": a, "class": POPULATION_TERM})
        kb.create_statement_unit("instance-of", {"subject": b, "class": VIRUS_TERM})
        return a, b

    def test_ensure_item_requires_statements(self, kb):
        with pytest.raises(NoStatements):
            kb.ensure_item_unit(kb.mint_node())

    def test_ensure_item_idempotent_and_recomputes_members(self, kb):
        a, _ = self.seed_entities(kb)
        item = kb.ensure_item_unit(a, "material-entity")
        assert item.item_kind == "instance"
        su = kb.create_statement_unit(
            "has-label", {"subject": a, "label": string_literal("wuhan cohort")}
        )
        again = kb.ensure_item_unit(a)
        assert again is item
        assert su.id in again.members
        assert again.item_class_label == "material-entity"

    def test_class_item_kind(self, kb):
        kb.create_statement_unit(
            "has-label", {"subject": HUMAN_TERM, "label": string_literal("humans")}
        )
        item = kb.ensure_item_unit(HUMAN_TERM)
        assert item.item_kind == "class"

    def test_group_needs_two_linked_items(self, kb):
        a, b = self.seed_entities(kb)
        item_a = kb.ensure_item_unit(a)
        item_b = kb.ensure_item_unit(b)
        with pytest.raises(TooFew):
            kb.form_item_group([item_a.id])
        with pytest.raises(NotLinked):
            kb.form_item_group([item_a.id, item_b.id])
        link = kb.create_statement_unit(
            "has-part-material", {"whole": a, "part-class": VIRUS_TERM}
        )
        # still not linked: the linking statement targets a fresh part node
        with pytest.raises(NotLinked):
            kb.form_item_group([item_a.id, item_b.id])
        part_item = kb.item_by_subject(link.fresh_nodes["part"])
        group = kb.form_item_group([item_a.id, part_item.id])
        assert link.id in group.members
        assert item_a.id in group.members
        assert group.subject == a

    def test_group_items_walks_connected_component(self, kb):
        a, _ = self.seed_entities(kb)
        item_a = kb.ensure_item_unit(a)
        link = kb.create_statement_unit(
            "has-part-material", {"whole": a, "part-class": VIRUS_TERM}
        )
        part_item = kb.item_by_subject(link.fresh_nodes["part"])
        group = kb.form_item_group([item_a.id, part_item.id])
        # extend the component after the group is formed
        link2 = kb.create_statement_unit(
            "has-part-material",
            {"whole": link.fresh_nodes["part"], "part-class": ORGANISM_TERM},
        )
        effective = kb.group_items(group)
        subjects = [it.subject for it in effective]
        assert subjects[0] == a
        assert link2.fresh_nodes["part"] in subjects
        assert len(effective) == 3

    def test_dataset_unit(self, kb):
        a, b = self.seed_entities(kb)
        item_a = kb.ensure_item_unit(a)
        item_b = kb.ensure_item_unit(b)
        ds = kb.create_dataset_unit([item_a.id, item_b.id], "cohort collection")
        assert ds.label == "cohort collection"
        assert ds.members == {item_a.id, item_b.id}
        with pytest.raises(Empty):
            kb.create_dataset_unit([], "empty")
        with pytest.raises(UnknownMember):
            kb.create_dataset_unit([Iri("http://ex.org/ghost")], "ghostly")

    def test_compound_data_graph_is_member_union(self, kb):
        a, _ = self.seed_entities(kb)
        item_a = kb.ensure_item_unit(a)
        direct = set()
        for su in kb.statements_with_subject(a):
            direct |= kb.store.data_graph_of(su.id)
        assert kb.compound_data_graph(item_a.id) == direct


class TestGranularityTrees:
    def grow(self, kb, whole, term=VIRUS_TERM):
        su = kb.create_statement_unit(
            "has-part-material", {"whole": whole, "part-class": term}
        )
        return su, su.fresh_nodes["part"]

    def test_single_statement_is_below_threshold(self, kb):
        root = kb.mint_node()
        self.grow(kb, root)
        assert kb.active_trees() == []

    def test_second_connected_statement_forms_tree(self, kb):
        root = kb.mint_node()
        self.grow(kb, root)
        su2, _ = self.grow(kb, root, ORGANISM_TERM)
        trees = kb.active_trees("parthood-tree")
        assert len(trees) == 1
        assert trees[0].subject == root
        assert len(trees[0].members) == 2
        assert su2.id in trees[0].members

    def test_disconnected_components_make_separate_trees(self, kb):
        root1 = kb.mint_node()
        root2 = kb.mint_node()
        self.grow(kb, root1)
        self.grow(kb, root1)
        self.grow(kb, root2)
        self.grow(kb, root2)
        assert len(kb.active_trees()) == 2

    def test_tree_updates_in_place_and_dissolves(self, kb):
        root = kb.mint_node()
        _, p1 = self.grow(kb, root)
        su2, _ = self.grow(kb, root)
        tree = kb.active_trees()[0]
        su3, _ = self.grow(kb, p1)
        assert kb.active_trees()[0].id == tree.id
        assert len(kb.active_trees()[0].members) == 3
        kb.retract_statement_unit(su3.id)
        kb.retract_statement_unit(su2.id)
        assert kb.active_trees() == []
        assert not kb.unit(tree.id).active
        kb.restore_statement_unit(su2.id)
        assert len(kb.active_trees()) == 1

    def test_cycle_reported_not_materialized(self, kb):
        root = kb.mint_node()
        su1, p1 = self.grow(kb, root)
        # close the loop by reusing the root as the second statement's part
        kb.create_statement_unit(
            "has-part-material",
            {"whole": p1, "part-class": VIRUS_TERM},
            fresh_override={"part": root},
        )
        report = kb.detect_granularity_trees("has-part-material")
        assert kb.active_trees() == []
        assert len(report.issues) == 1
        assert isinstance(report.issues[0], CycleDetected)
        assert root.value in report.issues[0].nodes

    def test_multi_parent_reported(self, kb):
        a = kb.mint_node()
        b = kb.mint_node()
        su1, p1 = self.grow(kb, a)
        # second parent for p1; the class term differs so no triple repeats
        kb.create_statement_unit(
            "has-part-material",
            {"whole": b, "part-class": ORGANISM_TERM},
            fresh_override={"part": p1},
        )
        report = kb.detect_granularity_trees("has-part-material")
        assert kb.active_trees() == []
        assert [type(i) for i in report.issues] == [MultiParent]
        assert p1.value in report.issues[0].nodes

    def test_detect_requires_partial_order_class(self, kb):
        with pytest.raises(NotPartialOrder):
            kb.detect_granularity_trees("has-quality")

    def test_derive_granular_item_group(self, kb):
        root = kb.mint_node()
        kb.create_statement_unit(
            "instance-of", {"subject": root, "class": POPULATION_TERM}
        )
        _, p1 = self.grow(kb, root)
        self.grow(kb, root)
        tree = kb.active_trees()[0]
        gig = kb.derive_granular_item_group(tree.id)
        assert tree.id in gig.members
        node_groups = [
            kb.unit(m) for m in gig.members if m != tree.id
        ]
        assert len(node_groups) == 3  # root and both parts
        assert gig.subject == root
        subjects = {g.subject for g in node_groups}
        assert root in subjects and p1 in subjects

    def test_weight_measurement_follow_up(self, kb, registry):
        bearer = kb.mint_node()
        q = kb.create_statement_unit(
            "has-quality", {"bearer": bearer, "quality-class": WEIGHT_TERM}
        )
        cls = registry.statement_class("has-quality")
        enabled = [
            fu.target for fu in cls.follow_ups if q.bindings.get(fu.slot) == fu.term
        ]
        assert enabled == ["weight-measurement"]
