import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semantic_units.errors import InactiveUnit, ParseError, PartitionViolation
from semantic_units.export import (
    HEADER_PREFIX,
    escape_string,
    parse_document,
    parse_quad_line,
    quad_line,
    quad_sort_key,
    render_document,
    render_nanopub,
    su_layer_triples,
    unescape_string,
)
from semantic_units.terms import (
    RDF_LANG_STRING,
    Iri,
    Literal,
    Triple,
    decimal_literal,
    string_literal,
)
from semantic_units.units import CertaintyLevel

from conftest import DIMENSIONLESS, POPULATION_TERM, R0_TERM, VIRUS_TERM

G = Iri("https://w3id.org/semunits/kb/statement/000001")
S = Iri("http://ex.org/s")
P = Iri("http://ex.org/p")


def seed_measurement(kb):
    pop = kb.mint_node()
    kb.create_statement_unit("instance-of", {"subject": pop, "class": POPULATION_TERM})
    q = kb.create_statement_unit("has-quality", {"bearer": pop, "quality-class": R0_TERM})
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
    return pop, q, m


class TestLineFormat:
    def test_string_datatype_omitted(self):
        line = quad_line(Triple(S, P, string_literal("x")), G)
        assert line == f'<{S.value}> <{P.value}> "x" <{G.value}> .'

    def test_non_string_datatype_written(self):
        line = quad_line(Triple(S, P, decimal_literal("2.2")), G)
        assert '"2.2"^^<http://www.w3.org/2001/XMLSchema#decimal>' in line

    def test_language_tag_written(self):
        lit = Literal("hallo", Iri(RDF_LANG_STRING), "de")
        line = quad_line(Triple(S, P, lit), G)
        assert '"hallo"@de' in line

    def test_escaping(self):
        assert escape_string('say "hi"\n') == 'say \\"hi\\"\\n'
        assert unescape_string('tab\\there') == "tab\there"
        assert escape_string("\x01") == "\\u0001"

    @pytest.mark.parametrize(
        "bad,col_hint",
        [
            ("nonsense", 1),
            ("<http://ex.org/s> <http://ex.org/p>", None),
            ('<http://ex.org/s> <http://ex.org/p> "x" <http://ex.org/g>', None),
            ('<http://ex.org/s> <http://ex.org/p> "x <http://ex.org/g> .', None),
        ],
    )
    def test_parse_errors_carry_position(self, bad, col_hint):
        with pytest.raises(ParseError) as err:
            parse_quad_line(bad, 7)
        assert err.value.line == 7
        assert err.value.column >= 1
        if col_hint is not None:
            assert err.value.column == col_hint

    def test_unknown_escape_rejected(self):
        with pytest.raises(ParseError):
            unescape_string("\\q", 1, 1)
        with pytest.raises(ParseError):
            unescape_string("\\uZZZZ", 1, 1)


nasty_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60
)
objects = st.one_of(
    st.builds(string_literal, nasty_text),
    st.builds(lambda t: Literal(t, Iri(RDF_LANG_STRING), "en"), nasty_text),
    st.builds(decimal_literal, st.decimals(allow_nan=False, allow_infinity=False)),
    st.just(Iri("http://ex.org/o")),
)


@settings(max_examples=200)
@given(objects)
def test_quad_line_round_trip(obj):
    triple = Triple(S, P, obj)
    parsed_triple, parsed_graph = parse_quad_line(quad_line(triple, G), 1)
    assert parsed_triple == triple
    assert parsed_graph == G


@settings(max_examples=100)
@given(nasty_text)
def test_escape_round_trip(text):
    assert unescape_string(escape_string(text)) == text


class TestDocument:
    def test_header_shape(self, kb):
        seed_measurement(kb)
        text = kb.export_quads()
        lines = text.splitlines()
        assert lines[0] == HEADER_PREFIX
        assert lines[1] == "# base: https://w3id.org/semunits/kb/"
        assert lines[2] == "# seed: 0"
        assert lines[3].startswith("# exported: 2024-01-01T")

    def test_quads_sorted_by_graph_then_triple(self, kb):
        seed_measurement(kb)
        body = [l for l in kb.export_quads().splitlines() if not l.startswith("#")]
        keys = [
            quad_sort_key(parse_quad_line(line, i + 1))
            for i, line in enumerate(body)
        ]
        assert keys == sorted(keys)
        assert len(body) == 21  # 1 typing + 3 quality + 17 measurement

    def test_empty_store_exports_header_only(self, kb):
        text = kb.export_quads()
        assert text.startswith(HEADER_PREFIX)
        assert "# exported: 1970-01-01T00:00:00.000Z" in text
        assert not [l for l in text.splitlines() if not l.startswith("#")]

    def test_parse_document_meta(self):
        text = render_document([], 3, "2024-02-02T00:00:00.000Z", "https://kb.example/")
        meta, rows = parse_document(text)
        assert meta["seed"] == "3"
        assert meta["exported"] == "2024-02-02T00:00:00.000Z"
        assert rows == []

    def test_parse_document_reports_line_numbers(self):
        text = HEADER_PREFIX + "\n\nbroken line\n"
        with pytest.raises(ParseError) as err:
            parse_document(text)
        assert err.value.line == 3


class TestRoundTrip:
    def test_export_import_export_byte_identical(self, kb, make_kb):
        seed_measurement(kb)
        doc = kb.export_quads()
        twin = make_kb()
        result = twin.import_quads(doc)
        assert result["quads_imported"] == 21
        assert result["units_created"] == 3
        assert twin.export_quads() == doc

    def test_import_preserves_timestamp(self, kb, make_kb):
        seed_measurement(kb)
        doc = kb.export_quads()
        twin = make_kb()
        twin.import_quads(doc)
        assert twin.store.content_timestamp() == kb.store.content_timestamp()

    def test_import_bumps_minter(self, kb, make_kb):
        pop, q, m = seed_measurement(kb)
        twin = make_kb()
        twin.import_quads(kb.export_quads())
        fresh = twin.mint_node()
        assert twin.store.triples_with_subject(fresh) == []
        assert fresh.value not in {u for u in twin.units}
        su = twin.create_statement_unit(
            "has-label", {"subject": pop, "label": string_literal("imported cohort")}
        )
        assert su.id.value not in {m.id.value, q.id.value}

    def test_import_rejects_conflicting_document(self, kb):
        text = render_document(
            [
                (Triple(S, P, string_literal("x")), G),
                (Triple(S, P, string_literal("x")), Iri(G.value + "0")),
            ],
            0,
            "2024-01-01T00:00:00.000Z",
            "https://w3id.org/semunits/kb/",
        )
        with pytest.raises(PartitionViolation):
            kb.import_quads(text)
        assert kb.store.active_count() == 0

    def test_import_rejects_clash_with_store(self, kb):
        pop, q, m = seed_measurement(kb)
        triple = next(iter(kb.store.data_graph_of(q.id)))
        text = render_document(
            [(triple, G)], 0, "2024-01-01T00:00:00.000Z", "https://w3id.org/semunits/kb/"
        )
        with pytest.raises(PartitionViolation):
            kb.import_quads(text)

    def test_scoped_export_filters_by_owner(self, kb):
        pop, q, m = seed_measurement(kb)
        kb.create_statement_unit(
            "has-label", {"subject": kb.mint_node(), "label": string_literal("noise")}
        )
        item = kb.ensure_item_unit(pop)
        scoped = kb.export_quads(scope=item.id)
        owners = {su.id.value for su in kb.statements_with_subject(pop)}
        expected = [
            l
            for l in kb.export_quads().splitlines()
            if not l.startswith("#") and l.rsplit("<", 1)[1].rstrip("> .") in owners
        ]
        scoped_body = [l for l in scoped.splitlines() if not l.startswith("#")]
        assert scoped_body == expected
        assert len(scoped_body) == 4  # typing + 3 quality triples

    def test_include_deleted_appends_history(self, kb):
        pop, q, m = seed_measurement(kb)
        kb.retract_statement_unit(m.id)
        active_only = kb.export_quads()
        with_history = kb.export_quads(include_deleted=True)
        active_lines = [l for l in active_only.splitlines() if not l.startswith("#")]
        all_lines = [l for l in with_history.splitlines() if not l.startswith("#")]
        assert len(all_lines) == len(active_lines) + 17
        assert set(active_lines) <= set(all_lines)


class TestNanopub:
    def test_bundle_shape(self, kb):
        pop, q, m = seed_measurement(kb)
        bundle = kb.export_nanopub(m.id)
        assert len(bundle.assertion) == 17
        assert bundle.pairwise_disjoint()
        assert bundle.graph_iri("assertion").value == m.id.value + "/assertion"
        head_preds = {t.predicate.value for t in bundle.head}
        assert "http://www.nanopub.org/nschema#hasAssertion" in head_preds

    def test_provenance_about_assertion_graph(self, kb):
        pop, q, m = seed_measurement(kb)
        bundle = kb.export_nanopub(m.id)
        assertion_iri = bundle.graph_iri("assertion")
        assert all(t.subject == assertion_iri for t in bundle.provenance)
        preds = {t.predicate.value for t in bundle.provenance}
        assert "http://www.w3.org/ns/prov#generatedAtTime" in preds
        assert "http://www.w3.org/ns/prov#wasAttributedTo" in preds

    def test_revision_link_in_provenance(self, kb):
        pop, q, m = seed_measurement(kb)
        successor = kb.update_slot(m.id, "value", decimal_literal("2.3"))
        bundle = kb.export_nanopub(successor.id)
        revisions = [
            t for t in bundle.provenance
            if t.predicate.value == "http://www.w3.org/ns/prov#wasRevisionOf"
        ]
        assert len(revisions) == 1
        assert revisions[0].object.value == m.id.value + "/assertion"

    def test_pubinfo_carries_class_and_certainty(self, kb):
        pop, q, m = seed_measurement(kb)
        kb.attach_certainty(m.id, CertaintyLevel("likely"))
        bundle = kb.export_nanopub(m.id)
        preds = {t.predicate.value: t.object for t in bundle.pubinfo}
        assert preds["https://w3id.org/semunits/vocab#instantiates"].value.endswith(
            "R0MeasurementWithCi"
        )
        assert preds["https://w3id.org/semunits/vocab#certainty"].value.endswith("likely")

    def test_retracted_unit_refused(self, kb):
        pop, q, m = seed_measurement(kb)
        kb.retract_statement_unit(m.id)
        with pytest.raises(InactiveUnit):
            kb.export_nanopub(m.id)

    def test_trig_rendering(self, kb):
        pop, q, m = seed_measurement(kb)
        text = render_nanopub(kb.export_nanopub(m.id))
        assert text.count("{") == text.count("}") == 4
        assert f"<{m.id.value}/assertion> {{" in text
        assert text.endswith("}\n")


class TestSuLayer:
    def test_statement_records(self, kb):
        pop, q, m = seed_measurement(kb)
        triples = su_layer_triples([m])
        preds = {t.predicate.value.rsplit("#", 1)[-1].rsplit("/", 1)[-1] for t in triples}
        assert {"type", "instantiates", "hasSubject", "quantification", "status", "created"} <= preds

    def test_compound_records_members(self, kb):
        pop, q, m = seed_measurement(kb)
        item = kb.ensure_item_unit(pop)
        triples = su_layer_triples([item])
        members = {
            t.object.value
            for t in triples
            if t.predicate.value.endswith("hasMember")
        }
        assert members == {su.id.value for su in kb.statements_with_subject(pop)}
