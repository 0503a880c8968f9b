"""Knowledge graphs organized into semantic units.

Statement units own data-graph triples inside named graphs; compound units
(items, groups, datasets, granularity trees) organize them. A pattern registry
turns slot bindings into graph patterns, a history layer records every edit,
and serializers round-trip the whole store through canonical quad documents.
"""

from .config import ServiceConfig
from .engine import DEFAULT_ACTOR, KnowledgeBase, OpRecord, TreeDetection, read_oplog
from .errors import SemanticUnitsError
from .history import EditEvent, EventLog, VersionSnapshot
from .registry import Registry, load_registry, load_registry_file, serialize_registry
from .scholarly import (
    BibliographicRecord,
    Doi,
    NavigationTree,
    ScholarlyWorkflow,
)
from .store import IriMinter, QuadStore, StepClock, SystemClock
from .terms import Iri, Literal, Term, Triple
from .units import CertaintyLevel, CompoundUnit, StatementUnit

__version__ = "0.1.0"

__all__ = [
    "BibliographicRecord",
    "CertaintyLevel",
    "CompoundUnit",
    "DEFAULT_ACTOR",
    "Doi",
    "EditEvent",
    "EventLog",
    "Iri",
    "IriMinter",
    "KnowledgeBase",
    "Literal",
    "NavigationTree",
    "OpRecord",
    "QuadStore",
    "Registry",
    "ScholarlyWorkflow",
    "SemanticUnitsError",
    "ServiceConfig",
    "StatementUnit",
    "StepClock",
    "SystemClock",
    "Term",
    "TreeDetection",
    "Triple",
    "VersionSnapshot",
    "load_registry",
    "load_registry_file",
    "read_oplog",
    "serialize_registry",
    "__version__",
]
