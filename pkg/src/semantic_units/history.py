"""Edit history and immutable version snapshots.

Every mutation appends EditEvents to an append-only log. Snapshots are
materialized copies: the closure's data-graph and SU-layer records are frozen
into canonical bytes at creation time, so later edits (or log compaction)
cannot change what a version IRI resolves to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .terms import Iri, Term, Triple

EVENT_CREATE = "create"
EVENT_UPDATE = "update"
EVENT_SOFT_DELETE = "soft-delete"
EVENT_RESTORE = "restore"
EVENT_SNAPSHOT = "snapshot"

EVENT_KINDS = (
    EVENT_CREATE,
    EVENT_UPDATE,
    EVENT_SOFT_DELETE,
    EVENT_RESTORE,
    EVENT_SNAPSHOT,
)


@dataclass(frozen=True)
class EditEvent:
    seq: int
    actor: str
    timestamp: str
    unit: Iri
    kind: str
    slot: Optional[str] = None
    before: Optional[Term] = None
    after: Optional[Term] = None


class EventLog:
    """Append-only, store-wide event log with strictly increasing seq."""

    def __init__(self):
        self._events: List[EditEvent] = []
        self._by_unit: Dict[str, List[EditEvent]] = {}

    def append(
        self,
        actor: str,
        timestamp: str,
        unit: Iri,
        kind: str,
        slot: Optional[str] = None,
        before: Optional[Term] = None,
        after: Optional[Term] = None,
    ) -> EditEvent:
        assert kind in EVENT_KINDS
        event = EditEvent(
            seq=len(self._events) + 1,
            actor=actor,
            timestamp=timestamp,
            unit=unit,
            kind=kind,
            slot=slot,
            before=before,
            after=after,
        )
        self._events.append(event)
        self._by_unit.setdefault(unit.value, []).append(event)
        return event

    def all_events(self) -> Tuple[EditEvent, ...]:
        return tuple(self._events)

    def for_unit(self, unit: Iri, slot: Optional[str] = None) -> List[EditEvent]:
        events = self._by_unit.get(unit.value, [])
        if slot is None:
            return list(events)
        return [e for e in events if e.slot == slot]

    def has_unit(self, unit: Iri) -> bool:
        return unit.value in self._by_unit

    def __len__(self) -> int:
        return len(self._events)


@dataclass(frozen=True)
class VersionSnapshot:
    """Frozen view of a unit closure; ``canonical_bytes`` never changes."""

    id: Iri
    target: Iri
    created: str
    frozen_data_graph: Tuple[Tuple[Triple, Iri], ...]  # (triple, owner unit)
    frozen_su_graph: Tuple[Triple, ...]
    canonical_bytes: bytes = field(repr=False, default=b"")
