"""Command line interface: serve, export, import, validate."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .config import ServiceConfig
from .errors import SemanticUnitsError
from .registry import load_registry_file


def _load_config(args) -> ServiceConfig:
    config = (
        ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
    )
    if getattr(args, "registry", None):
        config.registry_path = args.registry
    if getattr(args, "namespace", None):
        config.base_namespace = args.namespace
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "oplog", None):
        config.oplog_path = args.oplog
    if getattr(args, "port", None) is not None:
        config.port = args.port
    if getattr(args, "host", None):
        config.host = args.host
    if getattr(args, "ui", None):
        config.ui_dir = args.ui
    if getattr(args, "live", False):
        config.fixture_mode = False
    return config.with_env_overrides()


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_export(args) -> int:
    from .service import create_runtime
    from .terms import Iri

    config = _load_config(args)
    runtime = create_runtime(config)
    scope = Iri(args.scope) if args.scope else None
    document = runtime.kb.export_quads(scope, include_deleted=args.include_history)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return 0


def cmd_import(args) -> int:
    from .service import create_runtime

    config = _load_config(args)
    runtime = create_runtime(config)
    text = Path(args.document).read_text(encoding="utf-8")
    report = runtime.kb.import_quads(text)
    print(
        f"imported {report['quads_imported']} quads, "
        f"created {report['units_created']} units"
    )
    return 0


def cmd_validate(args) -> int:
    config = _load_config(args)
    registry = load_registry_file(config.registry_path)
    counts = registry.counts()
    print(
        f"registry ok: {counts['statement_classes']} statement, "
        f"{counts['item_classes']} item, {counts['tree_classes']} tree classes"
    )
    from .service import create_runtime

    runtime = create_runtime(config)
    kb = runtime.kb
    owners = {}
    for record in kb.store.active_records():
        prior = owners.get(record.triple)
        if prior is not None and prior != record.owner:
            print(f"partition violated: {record.triple} owned by {prior} and {record.owner}")
            return 1
        owners[record.triple] = record.owner
    print(f"partition ok: {len(owners)} active quads, {len(kb.units)} units")
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="semantic-units",
        description="Knowledge graphs organized into semantic units",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--registry", help="registry file path")
    common.add_argument("--namespace", help="base namespace for minted IRIs")
    common.add_argument("--seed", type=int, help="minting seed")
    common.add_argument("--oplog", help="operation log path (persistence)")
    common.add_argument(
        "--live", action="store_true", help="use live providers instead of fixtures"
    )

    p_serve = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--ui", help="static directory to serve the browser client from")
    p_serve.set_defaults(func=cmd_serve)

    p_export = sub.add_parser("export", parents=[common], help="export the quad document")
    p_export.add_argument("--scope", help="unit IRI to scope the export to")
    p_export.add_argument(
        "--include-history", action="store_true", help="also export soft-deleted quads"
    )
    p_export.add_argument("--out", help="output file (default stdout)")
    p_export.set_defaults(func=cmd_export)

    p_import = sub.add_parser("import", parents=[common], help="import a quad document")
    p_import.add_argument("document", help="quad document file")
    p_import.set_defaults(func=cmd_import)

    p_validate = sub.add_parser(
        "validate", parents=[common], help="check registry and store invariants"
    )
    p_validate.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SemanticUnitsError as exc:
        print(f"error ({exc.code}): {exc.message}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
