"""Shared fixtures: a fresh knowledge base per test, fixture providers,
and the ontology term IRIs the scholarly fixtures revolve around."""

import pytest

from semantic_units.config import (
    DEFAULT_DOI_RECORDS,
    DEFAULT_REGISTRY,
    DEFAULT_VOCABULARY,
)
from semantic_units.engine import KnowledgeBase
from semantic_units.providers import FixtureMetadataProvider, FixtureTerminologyProvider
from semantic_units.registry import load_registry_file
from semantic_units.scholarly import ScholarlyWorkflow
from semantic_units.store import StepClock
from semantic_units.terms import Iri

OBO = "http://purl.obolibrary.org/obo/"
POPULATION_TERM = Iri(OBO + "IDO_0000513")
R0_TERM = Iri(OBO + "OMIT_0024604")
WEIGHT_TERM = Iri(OBO + "PATO_0000128")
MASS_TERM = Iri(OBO + "PATO_0000125")
HUMAN_TERM = Iri(OBO + "NCBITaxon_9606")
VIRUS_TERM = Iri(OBO + "NCBITaxon_2697049")
ORGANISM_TERM = Iri(OBO + "OBI_0100026")
DIMENSIONLESS = Iri(OBO + "UO_0000186")
KILOGRAM = Iri(OBO + "UO_0000009")

NEJM_DOI = "10.1056/NEJMoa2001316"
SCIENCE_DOI = "10.1126/science.abb3221"
NATURE_DOI = "10.1038/s41586-020-2012-7"


@pytest.fixture(scope="session")
def registry():
    return load_registry_file(DEFAULT_REGISTRY)


@pytest.fixture(scope="session")
def terminology():
    return FixtureTerminologyProvider(DEFAULT_VOCABULARY)


@pytest.fixture(scope="session")
def metadata():
    return FixtureMetadataProvider(DEFAULT_DOI_RECORDS)


@pytest.fixture
def make_kb(registry, terminology):
    def factory(seed=0, log_path=None):
        return KnowledgeBase(
            registry,
            seed=seed,
            clock=StepClock(),
            resolver=terminology.resolve,
            log_path=log_path,
        )

    return factory


@pytest.fixture
def kb(make_kb):
    return make_kb()


@pytest.fixture
def workflow(kb):
    return ScholarlyWorkflow(kb)


@pytest.fixture
def nejm_record(metadata):
    from semantic_units.scholarly import Doi

    return metadata.fetch(Doi(NEJM_DOI))


# acceptance criteria report one PASS/FAIL line each; collected here so the
# lines survive pytest's output capture and print in the terminal summary
ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
