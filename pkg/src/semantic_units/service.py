"""HTTP service: the registry-driven editing API.

Every mutating endpoint maps 1:1 onto an engine or workflow operation, so the
HTTP layer adds no semantics of its own. Errors carry machine-readable codes
from the shared taxonomy.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .config import ServiceConfig
from .display import render_unit
from .engine import DEFAULT_ACTOR, KnowledgeBase, read_oplog
from .errors import SemanticUnitsError, UnknownUnit, ValidationError
from .export import render_nanopub
from .providers import (
    FixtureMetadataProvider,
    FixtureTerminologyProvider,
    LiveMetadataProvider,
    LiveTerminologyProvider,
    MetadataProvider,
    TerminologyProvider,
)
from .registry import Registry, load_registry_file
from .scholarly import Doi, ScholarlyWorkflow
from .store import StepClock, SystemClock
from .terms import Iri, Term, string_literal, term_from_json
from .units import CertaintyLevel, CompoundUnit, KIND_ITEM_GROUP, StatementUnit


@dataclass
class Runtime:
    config: ServiceConfig
    registry: Registry
    kb: KnowledgeBase
    workflow: ScholarlyWorkflow
    metadata: MetadataProvider
    terminology: TerminologyProvider


def create_runtime(config: Optional[ServiceConfig] = None) -> Runtime:
    config = config or ServiceConfig()
    if not os.path.exists(config.registry_path):
        raise ValidationError(f"registry file not found: {config.registry_path}")
    registry = load_registry_file(config.registry_path)
    if config.fixture_mode:
        metadata: MetadataProvider = FixtureMetadataProvider(config.doi_records_path)
        terminology: TerminologyProvider = FixtureTerminologyProvider(
            config.vocabulary_path
        )
        clock = StepClock()
    else:
        metadata = LiveMetadataProvider(
            config.crossref_url, config.provider_timeout, config.provider_retries
        )
        terminology = LiveTerminologyProvider(
            config.terminology_url, config.provider_timeout, config.provider_retries
        )
        clock = SystemClock()
    kb = KnowledgeBase(
        registry,
        base_namespace=config.base_namespace,
        seed=config.seed,
        clock=clock,
        resolver=terminology.resolve,
    )
    if config.oplog_path and os.path.exists(config.oplog_path):
        for record in read_oplog(config.oplog_path):
            kb.apply_op(record)
    if config.oplog_path:
        kb._log_path = config.oplog_path
    return Runtime(config, registry, kb, ScholarlyWorkflow(kb), metadata, terminology)


def _to_iri(runtime: Runtime, raw: str) -> Iri:
    if "://" in raw:
        return Iri(raw)
    return Iri(runtime.kb.base + raw)


def _to_term(value) -> Term:
    if isinstance(value, str):
        return string_literal(value)
    if isinstance(value, (int, float)):
        return string_literal(str(value))
    if isinstance(value, dict):
        return term_from_json(value)
    raise ValidationError(f"cannot interpret {value!r} as a term")


def _slot_forms(runtime: Runtime, class_labels) -> list:
    forms = []
    for label in class_labels:
        cls = runtime.registry.statement_classes.get(label)
        if cls is None:
            continue
        forms.append(
            {
                "class": cls.id.label,
                "description": cls.description,
                "slots": [
                    {
                        "name": s.name,
                        "role": s.role,
                        "range": s.range.value,
                        "input_mode": s.input_mode,
                        "required": s.required,
                    }
                    for s in cls.slots
                ],
            }
        )
    return forms


def _unit_info(runtime: Runtime, unit) -> dict:
    kb = runtime.kb
    info = {
        "id": unit.id.value,
        "status": unit.status,
        "created_at": unit.created_at,
    }
    if isinstance(unit, StatementUnit):
        info.update(
            {
                "kind": "statement",
                "class": unit.class_id.label,
                "quantification": unit.quantification,
                "subject": unit.subject.value,
                "predecessor": unit.predecessor.value if unit.predecessor else None,
                "successor": unit.successor.value if unit.successor else None,
                "fresh_nodes": {k: v.value for k, v in unit.fresh_nodes.items()},
            }
        )
        certainty = kb.certainty_of(unit.id)
        info["certainty"] = (
            {"level": certainty.level, "note": certainty.note} if certainty else None
        )
        follow_up = runtime.workflow.enabled_measurement(unit)
        info["follow_ups"] = _slot_forms(runtime, [follow_up] if follow_up else [])
    else:
        info.update(
            {
                "kind": unit.kind,
                "class": unit.item_class_label,
                "subject": unit.subject.value if unit.subject else None,
                "members": sorted(m.value for m in unit.members),
            }
        )
        item_cls = kb.item_class_of(unit)
        info["offers"] = _slot_forms(runtime, item_cls.offers if item_cls else [])
    return info


def create_app(config: Optional[ServiceConfig] = None, runtime: Optional[Runtime] = None) -> FastAPI:
    runtime = runtime or create_runtime(config)
    app = FastAPI(title="semantic-units", version="0.1.0")
    app.state.runtime = runtime

    @app.exception_handler(SemanticUnitsError)
    async def on_domain_error(request: Request, exc: SemanticUnitsError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.get("/health")
    def health():
        counts = runtime.registry.counts()
        return {
            "status": "ok",
            "mode": "fixture" if runtime.config.fixture_mode else "live",
            "registry": counts,
            "units": len(runtime.kb.units),
            "active_quads": runtime.kb.store.active_count(),
        }

    @app.post("/entries", status_code=201)
    async def create_entry(request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "doi" not in body:
            raise ValidationError("body must be a JSON object with a 'doi' field")
        doi = Doi(str(body["doi"]))
        actor = str(body.get("actor", DEFAULT_ACTOR))
        record = runtime.metadata.fetch(doi)
        group = runtime.workflow.create_publication_entry(doi, record, actor)
        tree = runtime.workflow.build_navigation_tree(group.id)
        return {
            "entry": group.id.value,
            "doi": doi.value,
            "title": record.title,
            "tree": tree.to_json(),
        }

    @app.get("/entries")
    def list_entries():
        return {"entries": runtime.workflow.entries()}

    @app.get("/entries/{entry_id:path}/tree")
    def entry_tree(entry_id: str):
        group_iri = _to_iri(runtime, entry_id)
        tree = runtime.workflow.build_navigation_tree(group_iri)
        partonomies = [
            {
                "unit": t.id.value,
                "root": t.subject.value if t.subject else None,
                "relation": t.relation_class.label if t.relation_class else None,
            }
            for t in runtime.kb.active_trees()
        ]
        payload = tree.to_json()
        payload["partonomies"] = partonomies
        return payload

    @app.post("/units/{unit_id:path}/statements", status_code=201)
    async def create_statement(unit_id: str, request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "class" not in body:
            raise ValidationError("body must be a JSON object with a 'class' field")
        unit = runtime.kb.require_unit(_to_iri(runtime, unit_id))
        cls = runtime.registry.statement_class(str(body["class"]))
        bindings = {
            name: _to_term(value)
            for name, value in (body.get("bindings") or {}).items()
        }
        subject_spec = cls.subject_slot()
        if subject_spec.name not in bindings:
            if isinstance(unit, CompoundUnit) and unit.subject is not None:
                bindings[subject_spec.name] = unit.subject
            elif isinstance(unit, StatementUnit):
                # follow-up posted on a statement: target the unit itself when
                # the slot expects a statement unit, else the node it minted
                own_cls = runtime.registry.statement_classes.get(unit.class_id.label)
                if subject_spec.range.value.endswith("StatementUnit"):
                    bindings[subject_spec.name] = unit.id
                elif own_cls is not None and own_cls.object_nodes:
                    bindings[subject_spec.name] = unit.fresh_nodes[own_cls.object_nodes[0]]
                else:
                    bindings[subject_spec.name] = unit.subject
        su = runtime.kb.create_statement_unit(
            cls.id.label,
            bindings,
            actor=str(body.get("actor", DEFAULT_ACTOR)),
            quantification=body.get("quantification"),
        )
        return {
            "unit": su.id.value,
            "class": su.class_id.label,
            "subject": su.subject.value,
            "fresh_nodes": {k: v.value for k, v in su.fresh_nodes.items()},
        }

    @app.get("/units/{unit_id:path}/history")
    def unit_history(unit_id: str, slot: Optional[str] = None):
        events = runtime.kb.history_of(_to_iri(runtime, unit_id), slot)
        return {
            "unit": _to_iri(runtime, unit_id).value,
            "events": [
                {
                    "seq": e.seq,
                    "actor": e.actor,
                    "timestamp": e.timestamp,
                    "unit": e.unit.value,
                    "kind": e.kind,
                    "slot": e.slot,
                    "before": e.before.lexical if hasattr(e.before, "lexical") else (
                        e.before.value if e.before is not None else None
                    ),
                    "after": e.after.lexical if hasattr(e.after, "lexical") else (
                        e.after.value if e.after is not None else None
                    ),
                }
                for e in events
            ],
        }

    @app.post("/units/{unit_id:path}/snapshots", status_code=201)
    def create_snapshot(unit_id: str):
        snap = runtime.kb.create_snapshot(_to_iri(runtime, unit_id))
        return {
            "version": snap.id.value,
            "target": snap.target.value,
            "created": snap.created,
        }

    @app.get("/units/{unit_id:path}")
    def unit_detail(unit_id: str, depth: int = 1):
        iri = _to_iri(runtime, unit_id)
        unit = runtime.kb.unit(iri)
        if unit is None:
            raise UnknownUnit(f"no unit {iri}")
        payload = render_unit(runtime.kb, iri, depth=depth)
        return {"unit": _unit_info(runtime, unit), "payload": payload.to_json()}

    @app.post("/statements/{unit_id:path}/certainty", status_code=201)
    async def set_certainty(unit_id: str, request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "level" not in body:
            raise ValidationError("body must be a JSON object with a 'level' field")
        level = CertaintyLevel(str(body["level"]), body.get("note"))
        su = runtime.kb.attach_certainty(
            _to_iri(runtime, unit_id), level, str(body.get("actor", DEFAULT_ACTOR))
        )
        return {"unit": su.id.value, "level": level.level, "note": level.note}

    @app.patch("/statements/{unit_id:path}/slots/{slot}")
    async def patch_slot(unit_id: str, slot: str, request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "value" not in body:
            raise ValidationError("body must be a JSON object with a 'value' field")
        successor = runtime.kb.update_slot(
            _to_iri(runtime, unit_id),
            slot,
            _to_term(body["value"]),
            str(body.get("actor", DEFAULT_ACTOR)),
        )
        return {"unit": successor.id.value, "slot": slot}

    @app.delete("/statements/{unit_id:path}")
    def delete_statement(unit_id: str, actor: str = DEFAULT_ACTOR):
        su = runtime.kb.retract_statement_unit(_to_iri(runtime, unit_id), actor)
        return {"unit": su.id.value, "status": su.status}

    @app.get("/versions/{version_id:path}")
    def version_detail(version_id: str):
        snap = runtime.kb.resolve_snapshot(_to_iri(runtime, version_id))
        return PlainTextResponse(
            snap.canonical_bytes.decode("utf-8"), media_type="application/n-quads"
        )

    @app.get("/export")
    def export(scope: Optional[str] = None, include_deleted: bool = False):
        scope_iri = _to_iri(runtime, scope) if scope else None
        document = runtime.kb.export_quads(scope_iri, include_deleted)
        return PlainTextResponse(document, media_type="application/n-quads")

    @app.get("/nanopub/{unit_id:path}")
    def nanopub(unit_id: str):
        bundle = runtime.kb.export_nanopub(_to_iri(runtime, unit_id))
        return PlainTextResponse(render_nanopub(bundle), media_type="application/trig")

    @app.get("/terms")
    def terms(q: str, slot: Optional[str] = None):
        range_iri = None
        if slot:
            if "." not in slot:
                raise ValidationError("slot filter must look like class-label.slot-name")
            class_label, slot_name = slot.split(".", 1)
            cls = runtime.registry.statement_class(class_label)
            spec = cls.slot(slot_name)
            if spec is None:
                raise ValidationError(f"class {class_label} has no slot {slot_name}")
            range_iri = spec.range
        suggestions = runtime.terminology.search(q, range_iri)
        return {"suggestions": [s.to_json() for s in suggestions]}

    if runtime.config.ui_dir:
        # registered last, so API routes always win over static files
        from fastapi.staticfiles import StaticFiles

        if not os.path.isdir(runtime.config.ui_dir):
            raise ValidationError(f"ui directory not found: {runtime.config.ui_dir}")
        app.mount("/", StaticFiles(directory=runtime.config.ui_dir, html=True), name="ui")

    return app
