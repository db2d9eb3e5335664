"""Run configuration: one JSON document with ``filter``, ``weights``,
``analyzer`` and ``connectors`` sections plus a few top-level keys.

Example::

    {
      "backend": "rules",
      "as_of": "2025-06-01T00:00:00Z",
      "concurrency_cap": 4,
      "filter": {"confidence_threshold": 0.5},
      "weights": {"feature_alpha": [0.15, 0.2, 0.25, 0.3, 0.1]},
      "analyzer": {"retries": 2},
      "connectors": {"model_name": "gpt-4o-mini", "temperature": 0.0}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .analyzer.extract import AnalyzerConfig
from .connectors import DEFAULT_MODEL
from .corpus import format_timestamp, parse_timestamp
from .prefilter import FilterConfig
from .scoring import Weights

BACKENDS = ("live", "rules")


@dataclass(frozen=True)
class ConnectorConfig:
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_output_tokens: int = 1024
    base_url: Optional[str] = None
    offline: Optional[bool] = None
    repo_fixture_dir: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "base_url": self.base_url,
            "offline": self.offline,
            "repo_fixture_dir": self.repo_fixture_dir,
        }


@dataclass(frozen=True)
class RunConfig:
    corpus_root: Optional[Path] = None
    cache_dir: Optional[Path] = None
    backend: str = "rules"
    filter: FilterConfig = field(default_factory=FilterConfig)
    weights: Weights = field(default_factory=Weights)
    analyzer: AnalyzerConfig = field(default_factory=AnalyzerConfig)
    connectors: ConnectorConfig = field(default_factory=ConnectorConfig)
    concurrency_cap: int = 1
    as_of: Optional[datetime] = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.concurrency_cap < 1:
            raise ValueError("concurrency_cap must be >= 1")

    def reference_time(self) -> datetime:
        """Reference 'now' for repository age; fixed by ``as_of`` for reproducible runs."""
        if self.as_of is not None:
            return self.as_of
        return datetime.now(timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "as_of": format_timestamp(self.as_of) if self.as_of else None,
            "concurrency_cap": self.concurrency_cap,
            "filter": self.filter.to_dict(),
            "weights": self.weights.to_dict(),
            "analyzer": self.analyzer.to_dict(),
            "connectors": self.connectors.to_dict(),
        }


def config_from_dict(data: dict, base_dir: Optional[Path] = None) -> RunConfig:
    known = {"backend", "as_of", "concurrency_cap", "corpus_root", "cache_dir",
             "filter", "weights", "analyzer", "connectors"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")

    def path(key):
        if data.get(key) is None:
            return None
        p = Path(data[key])
        return p if p.is_absolute() or base_dir is None else base_dir / p

    connectors = dict(data.get("connectors", {}))
    if connectors.get("repo_fixture_dir") and base_dir is not None:
        p = Path(connectors["repo_fixture_dir"])
        connectors["repo_fixture_dir"] = str(p if p.is_absolute() else base_dir / p)
    return RunConfig(
        corpus_root=path("corpus_root"),
        cache_dir=path("cache_dir"),
        backend=data.get("backend", "rules"),
        filter=FilterConfig.from_dict(data.get("filter", {})),
        weights=Weights.from_dict(data.get("weights", {})),
        analyzer=AnalyzerConfig.from_dict(data.get("analyzer", {})),
        connectors=ConnectorConfig(**connectors),
        concurrency_cap=int(data.get("concurrency_cap", 1)),
        as_of=parse_timestamp(data["as_of"]) if data.get("as_of") else None,
    )


def load_config(path) -> RunConfig:
    """Relative paths inside the file resolve against the file's directory."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config_from_dict(data, path.parent)
