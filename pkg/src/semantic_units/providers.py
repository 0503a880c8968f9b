"""Metadata and terminology providers, live and fixture-backed.

Fixture providers read bundled JSON files and never touch the network, so the
whole engine test surface runs offline. Live providers talk to CrossRef and a
public terminology service with retry plus backoff.
"""

from __future__ import annotations

import abc
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from .errors import NotFound, ProviderUnavailable, ValidationError
from .scholarly import BibliographicRecord, Doi
from .terms import Iri

MIN_QUERY_LENGTH = 2


@dataclass(frozen=True)
class TermSuggestion:
    iri: Iri
    label: str
    vocabulary: str

    def __post_init__(self):
        if not self.label:
            raise ValidationError("term suggestion needs a nonempty label")

    def to_json(self) -> dict:
        return {"iri": self.iri.value, "label": self.label, "vocabulary": self.vocabulary}


class MetadataProvider(abc.ABC):
    @abc.abstractmethod
    def fetch(self, doi: Doi) -> BibliographicRecord:
        """Bibliographic record for the DOI; NotFound / ProviderUnavailable."""


class TerminologyProvider(abc.ABC):
    @abc.abstractmethod
    def resolve(self, iri: Iri) -> Optional[str]:
        """Label for a known term IRI; None when the vocabulary lacks it."""

    @abc.abstractmethod
    def search(self, query: str, range_iri: Optional[Iri] = None) -> List[TermSuggestion]:
        """Suggestions matching the query, ordered by (label, IRI)."""


def _check_query(query: str) -> str:
    query = query.strip()
    if len(query) < MIN_QUERY_LENGTH:
        raise ValidationError(
            f"query must be at least {MIN_QUERY_LENGTH} characters, got {query!r}"
        )
    return query


class FixtureMetadataProvider(MetadataProvider):
    def __init__(self, path: str):
        self._records: Dict[str, dict] = json.loads(
            Path(path).read_text(encoding="utf-8")
        )

    def fetch(self, doi: Doi) -> BibliographicRecord:
        record = self._records.get(doi.value)
        if record is None:
            raise NotFound(f"no fixture record for DOI {doi}")
        return BibliographicRecord.from_dict({"doi": doi.value, **record})


class FixtureTerminologyProvider(TerminologyProvider):
    def __init__(self, path: str):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        self._terms: List[dict] = data["terms"]
        self._by_iri: Dict[str, dict] = {t["iri"]: t for t in self._terms}
        self._vocabulary = data.get("vocabulary", "fixture")

    def resolve(self, iri: Iri) -> Optional[str]:
        term = self._by_iri.get(iri.value)
        return term["label"] if term else None

    def search(self, query: str, range_iri: Optional[Iri] = None) -> List[TermSuggestion]:
        query = _check_query(query).lower()
        out = []
        for term in self._terms:
            if query not in term["label"].lower():
                continue
            if range_iri is not None:
                classes = term.get("classes", [])
                if range_iri.value not in classes and range_iri.value != term["iri"]:
                    continue
            out.append(
                TermSuggestion(Iri(term["iri"]), term["label"], self._vocabulary)
            )
        out.sort(key=lambda s: (s.label, s.iri.value))
        return out


def _retrying(call, retries: int, backoff: float):
    last = None
    for attempt in range(retries):
        try:
            return call()
        except ProviderUnavailable:
            raise
        except NotFound:
            raise
        except Exception as exc:  # noqa: BLE001 - network errors vary by stack
            last = exc
            if attempt + 1 < retries:
                time.sleep(backoff * (2**attempt))
    raise ProviderUnavailable(f"provider unreachable after {retries} attempts: {last}")


class LiveMetadataProvider(MetadataProvider):
    """CrossRef works endpoint."""

    def __init__(self, base_url: str, timeout: float = 10.0, retries: int = 3,
                 backoff: float = 0.5):
        self.base_url = base_url.rstrip("/") + "/"
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def fetch(self, doi: Doi) -> BibliographicRecord:
        import requests

        def call():
            response = requests.get(self.base_url + doi.value, timeout=self.timeout)
            if response.status_code == 404:
                raise NotFound(f"CrossRef has no record for DOI {doi}")
            response.raise_for_status()
            return response.json()

        payload = _retrying(call, self.retries, self.backoff)
        message = payload.get("message", {})
        titles = message.get("title") or [""]
        authors = []
        for author in message.get("author", []):
            given = author.get("given", "").strip()
            family = author.get("family", "").strip()
            name = " ".join(p for p in (given, family) if p)
            if name:
                authors.append(name)
        year = None
        issued = message.get("issued", {}).get("date-parts") or []
        if issued and issued[0]:
            year = int(issued[0][0])
        venues = message.get("container-title") or []
        return BibliographicRecord(
            doi=doi,
            title=titles[0],
            authors=tuple(authors),
            year=year,
            venue=venues[0] if venues else None,
        )


class LiveTerminologyProvider(TerminologyProvider):
    """OLS-style search endpoint; fixture provider covers offline runs."""

    def __init__(self, base_url: str, timeout: float = 10.0, retries: int = 3,
                 backoff: float = 0.5):
        self.base_url = base_url
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def _get(self, params: dict) -> dict:
        import requests

        def call():
            response = requests.get(self.base_url, params=params, timeout=self.timeout)
            response.raise_for_status()
            return response.json()

        return _retrying(call, self.retries, self.backoff)

    def resolve(self, iri: Iri) -> Optional[str]:
        payload = self._get({"q": iri.value, "queryFields": "iri", "rows": 1})
        docs = payload.get("response", {}).get("docs", [])
        for doc in docs:
            if doc.get("iri") == iri.value and doc.get("label"):
                return doc["label"]
        return None

    def search(self, query: str, range_iri: Optional[Iri] = None) -> List[TermSuggestion]:
        query = _check_query(query)
        params = {"q": query, "rows": 20}
        if range_iri is not None:
            params["childrenOf"] = range_iri.value
        payload = self._get(params)
        docs = payload.get("response", {}).get("docs", [])
        out = []
        for doc in docs:
            iri = doc.get("iri")
            label = doc.get("label")
            if iri and label:
                out.append(TermSuggestion(Iri(iri), label, doc.get("ontology_name", "ols")))
        out.sort(key=lambda s: (s.label, s.iri.value))
        return out
