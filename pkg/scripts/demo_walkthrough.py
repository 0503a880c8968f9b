"""End-to-end walkthrough against an in-process knowledge base.

Builds a publication entry from the bundled fixture records, attaches the
population / quality / measurement structure, and prints what the service
would serve: the navigation tree, the one-line rendering, the nanopub and
the canonical export. Run with:

    python3 scripts/demo_walkthrough.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from semantic_units.config import (
    DEFAULT_DOI_RECORDS,
    DEFAULT_REGISTRY,
    DEFAULT_VOCABULARY,
)
from semantic_units.display import render_unit
from semantic_units.engine import KnowledgeBase
from semantic_units.export import render_nanopub
from semantic_units.providers import FixtureMetadataProvider, FixtureTerminologyProvider
from semantic_units.registry import load_registry_file
from semantic_units.scholarly import Doi, ScholarlyWorkflow
from semantic_units.store import StepClock
from semantic_units.terms import Iri

OBO = "http://purl.obolibrary.org/obo/"
POPULATION = Iri(OBO + "IDO_0000513")
R0 = Iri(OBO + "OMIT_0024604")
DIMENSIONLESS = Iri(OBO + "UO_0000186")
DOI = "10.1056/NEJMoa2001316"


def banner(title):
    print()
    print(f"== {title} ".ljust(72, "="))


def main():
    registry = load_registry_file(DEFAULT_REGISTRY)
    terminology = FixtureTerminologyProvider(DEFAULT_VOCABULARY)
    metadata = FixtureMetadataProvider(DEFAULT_DOI_RECORDS)
    kb = KnowledgeBase(registry, clock=StepClock(), resolver=terminology.resolve)
    workflow = ScholarlyWorkflow(kb)

    banner(f"entry from DOI {DOI}")
    doi = Doi(DOI)
    entry = workflow.create_publication_entry(doi, metadata.fetch(doi))
    result = kb.statements_of_class("has-output")[0].fresh_nodes["result"]
    about = kb.create_statement_unit(
        "is-about", {"result": result, "entity-class": POPULATION}
    )
    population = about.fresh_nodes["entity"]
    quality = workflow.add_quality(population, R0)
    workflow.add_measurement(
        quality.id, "2.2", "0.95", "1.9", "2.6", unit_term=DIMENSIONLESS
    )
    tree = workflow.build_navigation_tree(entry.id)
    for node in tree.nodes:
        indent = 0
        parent = node.parent
        by_item = {n.item: n for n in tree.nodes}
        while parent is not None:
            indent += 1
            parent = by_item[parent].parent if parent in by_item else None
        print("  " * indent + node.label)

    banner("rendered quality statement")
    print(render_unit(kb, quality.id).line)

    banner("nanopublication (TriG)")
    print(render_nanopub(kb.export_nanopub(quality.id)))

    banner("canonical export (first 12 lines)")
    for line in kb.export_quads().splitlines()[:12]:
        print(line)

    banner("store summary")
    print(f"{len(kb.units)} units, {kb.store.active_count()} active quads")


if __name__ == "__main__":
    main()
