"""Command line round trips: validate, export, import, oplog persistence."""

import pytest

from semantic_units.cli import main
from semantic_units.scholarly import Doi, ScholarlyWorkflow

from conftest import DIMENSIONLESS, NEJM_DOI, POPULATION_TERM, R0_TERM


def seed_store(make_kb, metadata, log_path):
    kb = make_kb(log_path=str(log_path))
    wf = ScholarlyWorkflow(kb)
    doi = Doi(NEJM_DOI)
    wf.create_publication_entry(doi, metadata.fetch(doi))
    result = kb.statements_of_class("has-output")[0].fresh_nodes["result"]
    about = kb.create_statement_unit(
        "is-about", {"result": result, "entity-class": POPULATION_TERM}
    )
    quality = wf.add_quality(about.fresh_nodes["entity"], R0_TERM)
    wf.add_measurement(quality.id, "2.2", "0.95", "1.9", "2.6", unit_term=DIMENSIONLESS)
    return kb


class TestValidate:
    def test_empty_store(self, capsys):
        assert main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "registry ok: 21 statement, 5 item, 1 tree classes" in out
        assert "partition ok: 0 active quads, 0 units" in out

    def test_seeded_store_counts(self, tmp_path, make_kb, metadata, capsys):
        log = tmp_path / "ops.jsonl"
        kb = seed_store(make_kb, metadata, log)
        assert main(["validate", "--oplog", str(log)]) == 0
        out = capsys.readouterr().out
        assert f"partition ok: {kb.store.active_count()} active quads" in out

    def test_missing_registry_exits_two(self, tmp_path, capsys):
        code = main(["validate", "--registry", str(tmp_path / "none.txt")])
        assert code == 2
        assert "error" in capsys.readouterr().err


class TestExportImport:
    def test_oplog_round_trip_is_byte_identical(
        self, tmp_path, make_kb, metadata, capsys
    ):
        log_a = tmp_path / "a.jsonl"
        kb = seed_store(make_kb, metadata, log_a)
        doc = tmp_path / "store.nq"
        assert main(["export", "--oplog", str(log_a), "--out", str(doc)]) == 0
        document = doc.read_text(encoding="utf-8")
        assert document == kb.export_quads()

        log_b = tmp_path / "b.jsonl"
        assert main(["import", "--oplog", str(log_b), str(doc)]) == 0
        report = capsys.readouterr().out
        assert "imported" in report and "created" in report

        # a fresh runtime replaying log_b must serve the same bytes back
        doc2 = tmp_path / "again.nq"
        assert main(["export", "--oplog", str(log_b), "--out", str(doc2)]) == 0
        assert doc2.read_text(encoding="utf-8") == document

    def test_export_to_stdout(self, tmp_path, make_kb, metadata, capsys):
        log = tmp_path / "ops.jsonl"
        kb = seed_store(make_kb, metadata, log)
        assert main(["export", "--oplog", str(log)]) == 0
        assert capsys.readouterr().out == kb.export_quads()

    def test_scoped_export(self, tmp_path, make_kb, metadata, capsys):
        log = tmp_path / "ops.jsonl"
        kb = seed_store(make_kb, metadata, log)
        quality = kb.statements_of_class("has-quality")[0]
        code = main(["export", "--oplog", str(log), "--scope", quality.id.value])
        assert code == 0
        body = [
            line
            for line in capsys.readouterr().out.splitlines()
            if not line.startswith("#")
        ]
        assert len(body) == 3
        assert all(f"<{quality.id.value}>" in line for line in body)

    def test_import_rejects_malformed_document(self, tmp_path, capsys):
        bad = tmp_path / "bad.nq"
        bad.write_text("<only-two-terms> <p> .\n", encoding="utf-8")
        code = main(["import", "--oplog", str(tmp_path / "c.jsonl"), str(bad)])
        assert code == 2
        assert "error (parse-error)" in capsys.readouterr().err

    def test_import_missing_file_exits_two(self, tmp_path, capsys):
        assert main(["import", str(tmp_path / "nope.nq")]) == 2
        assert "error" in capsys.readouterr().err


class TestParser:
    def test_serve_help(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["serve", "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--port" in out and "--oplog" in out

    def test_command_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
