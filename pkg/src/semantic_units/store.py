"""Append-mostly quad store: every active data triple is owned by exactly one
statement unit.

Ownership is the partition carrier: at most one *active* record exists per
triple value store-wide, enforced at write time. Soft-deleted records are kept
forever for history and citation; the same triple value may recur across
soft-deleted owners.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from .errors import PartitionViolation, UnknownOwner, ValidationError
from .terms import Iri, Triple

STATUS_ACTIVE = "active"
STATUS_DELETED = "soft-deleted"

STORE_EPOCH = "1970-01-01T00:00:00.000Z"


def utc_now_ms() -> str:
    """Wall-clock timestamp, UTC, millisecond resolution."""
    now = datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%S.") + f"{now.microsecond // 1000:03d}Z"


class SystemClock:
    def now(self) -> str:
        return utc_now_ms()


class StepClock:
    """Deterministic clock: starts at a fixed instant, advances 1 ms per call.

    Used in fixture mode and tests so replays and exports are reproducible.
    """

    def __init__(self, start: str = "2024-01-01T00:00:00.000Z"):
        self._start = datetime.strptime(start, "%Y-%m-%dT%H:%M:%S.%fZ").replace(
            tzinfo=timezone.utc
        )
        self._ticks = 0

    def now(self) -> str:
        instant = self._start.timestamp() + self._ticks / 1000.0
        self._ticks += 1
        dt = datetime.fromtimestamp(instant, tz=timezone.utc)
        return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


class IriMinter:
    """Mints fresh IRIs as <base>/<kind>/<zero-padded counter>.

    Counters are per kind and start at ``seed``, so the id sequence is a pure
    function of (seed, call sequence) and replays are byte-identical.
    """

    PAD = 6

    def __init__(self, base_namespace: str, seed: int = 0):
        if not base_namespace.endswith(("/", "#")):
            base_namespace += "/"
        Iri(base_namespace + "probe")  # validate the namespace early
        self.base = base_namespace
        self.seed = int(seed)
        self._counters: Dict[str, int] = {}

    def mint(self, kind: str) -> Iri:
        if not kind or "/" in kind or " " in kind:
            raise ValidationError(f"bad node-kind label: {kind!r}")
        n = self._counters.get(kind, self.seed) + 1
        self._counters[kind] = n
        return Iri(f"{self.base}{kind}/{n:0{self.PAD}d}")

    def bump_past(self, iri: Iri) -> None:
        """Advance counters beyond an externally supplied IRI so future mints
        cannot collide with imported ids."""
        v = iri.value
        if not v.startswith(self.base):
            return
        rest = v[len(self.base):]
        parts = rest.split("/")
        if len(parts) != 2 or not parts[1].isdigit():
            return
        kind, n = parts[0], int(parts[1])
        if n > self._counters.get(kind, self.seed):
            self._counters[kind] = n


@dataclass
class QuadRecord:
    """One data-graph triple plus its owning statement unit and lifecycle.

    (triple, owner, created_at) never mutate; soft deletion only flips status
    and stamps deleted_at.
    """

    triple: Triple
    owner: Iri
    status: str = STATUS_ACTIVE
    created_at: str = ""
    deleted_at: Optional[str] = None

    @property
    def active(self) -> bool:
        return self.status == STATUS_ACTIVE


class QuadStore:
    def __init__(self, owner_exists: Optional[Callable[[Iri], bool]] = None):
        self._records: List[QuadRecord] = []
        self._active_by_triple: Dict[Triple, QuadRecord] = {}
        self._by_owner: Dict[Iri, List[QuadRecord]] = {}
        self._active_by_subject: Dict[Iri, List[QuadRecord]] = {}
        self._owner_exists = owner_exists

    # -- writes ---------------------------------------------------------

    def assert_triples(
        self, owner: Iri, triples: Iterable[Triple], ts: str
    ) -> List[QuadRecord]:
        """Store all triples active under ``owner``; atomic, all or nothing.

        A triple already active under the same owner is skipped (graphs are
        sets); one active under a different owner is a partition violation
        and signals a modeling bug.
        """
        if self._owner_exists is not None and not self._owner_exists(owner):
            raise UnknownOwner(f"no statement unit registered for {owner}")
        batch: List[Triple] = []
        seen: Set[Triple] = set()
        for t in triples:
            current = self._active_by_triple.get(t)
            if current is not None:
                if current.owner != owner:
                    raise PartitionViolation(
                        f"triple already owned by {current.owner}: {t}",
                        details={"owner": current.owner.value},
                    )
                continue
            if t not in seen:
                seen.add(t)
                batch.append(t)
        created = []
        for t in batch:
            rec = QuadRecord(triple=t, owner=owner, created_at=ts)
            self._records.append(rec)
            self._active_by_triple[t] = rec
            self._by_owner.setdefault(owner, []).append(rec)
            self._active_by_subject.setdefault(t.subject, []).append(rec)
            created.append(rec)
        return created

    def soft_retract(self, owner: Iri, ts: str) -> int:
        """Soft-delete all active records of ``owner``; idempotent."""
        if self._owner_exists is not None and not self._owner_exists(owner):
            raise UnknownOwner(f"no statement unit registered for {owner}")
        count = 0
        for rec in self._by_owner.get(owner, []):
            if rec.active:
                rec.status = STATUS_DELETED
                rec.deleted_at = ts
                self._active_by_triple.pop(rec.triple, None)
                subj = self._active_by_subject.get(rec.triple.subject)
                if subj is not None:
                    subj.remove(rec)
                    if not subj:
                        del self._active_by_subject[rec.triple.subject]
                count += 1
        return count

    def restore(self, owner: Iri, ts: str) -> int:
        """Re-activate the owner's most recent retraction batch."""
        if self._owner_exists is not None and not self._owner_exists(owner):
            raise UnknownOwner(f"no statement unit registered for {owner}")
        recs = [r for r in self._by_owner.get(owner, []) if not r.active]
        if not recs:
            return 0
        last = max(r.deleted_at for r in recs)
        batch = [r for r in recs if r.deleted_at == last]
        for rec in batch:
            current = self._active_by_triple.get(rec.triple)
            if current is not None and current.owner != owner:
                raise PartitionViolation(
                    f"triple now owned by {current.owner}: {rec.triple}",
                    details={"owner": current.owner.value},
                )
        restored = 0
        for rec in batch:
            if rec.triple in self._active_by_triple:
                continue
            rec.status = STATUS_ACTIVE
            rec.deleted_at = None
            self._active_by_triple[rec.triple] = rec
            self._active_by_subject.setdefault(rec.triple.subject, []).append(rec)
            restored += 1
        return restored

    # -- reads ----------------------------------------------------------

    def data_graph_of(self, owner: Iri) -> Set[Triple]:
        if self._owner_exists is not None and not self._owner_exists(owner):
            raise UnknownOwner(f"no statement unit registered for {owner}")
        return {r.triple for r in self._by_owner.get(owner, []) if r.active}

    def owner_of(self, triple: Triple) -> Optional[Iri]:
        rec = self._active_by_triple.get(triple)
        return rec.owner if rec is not None else None

    def triples_with_subject(self, subject: Iri) -> List[Tuple[Triple, Iri]]:
        return [
            (r.triple, r.owner) for r in self._active_by_subject.get(subject, [])
        ]

    def triples_with_predicate(self, predicate: Iri) -> List[Tuple[Triple, Iri]]:
        return [
            (r.triple, r.owner)
            for r in self._active_by_triple.values()
            if r.triple.predicate == predicate
        ]

    def active_records(self) -> List[QuadRecord]:
        return [r for r in self._records if r.active]

    def all_records(self) -> List[QuadRecord]:
        return list(self._records)

    def active_count(self) -> int:
        return len(self._active_by_triple)

    def content_timestamp(self) -> str:
        """Max created_at over active records; the export header timestamp."""
        stamps = [r.created_at for r in self._records if r.active]
        return max(stamps) if stamps else STORE_EPOCH
