"""Service configuration: file values, env overrides, fixture paths."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import ValidationError

FIXTURE_DIR = Path(__file__).parent / "fixtures"
DEFAULT_REGISTRY = FIXTURE_DIR / "scholarly_registry.txt"
DEFAULT_DOI_RECORDS = FIXTURE_DIR / "doi_records.json"
DEFAULT_VOCABULARY = FIXTURE_DIR / "vocabulary.json"

ENV_PORT = "SEMANTIC_UNITS_PORT"
ENV_NAMESPACE = "SEMANTIC_UNITS_NAMESPACE"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8008
    base_namespace: str = "https://w3id.org/semunits/kb/"
    registry_path: str = str(DEFAULT_REGISTRY)
    fixture_mode: bool = True
    seed: int = 0
    doi_records_path: str = str(DEFAULT_DOI_RECORDS)
    vocabulary_path: str = str(DEFAULT_VOCABULARY)
    oplog_path: Optional[str] = None
    ui_dir: Optional[str] = None
    crossref_url: str = "https://api.crossref.org/works/"
    terminology_url: str = "https://www.ebi.ac.uk/ols4/api/search"
    provider_timeout: float = 10.0
    provider_retries: int = 3

    @staticmethod
    def from_file(path: str) -> "ServiceConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValidationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from None
        known = {f.name for f in fields(ServiceConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return ServiceConfig(**data)

    def with_env_overrides(self) -> "ServiceConfig":
        port = os.environ.get(ENV_PORT)
        if port is not None:
            try:
                self.port = int(port)
            except ValueError:
                raise ValidationError(f"{ENV_PORT} must be an integer, got {port!r}") from None
        namespace = os.environ.get(ENV_NAMESPACE)
        if namespace is not None:
            self.base_namespace = namespace
        return self
