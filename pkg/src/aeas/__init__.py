"""Exploit actionability scoring: repository prefiltering, sub-feature
extraction, weighted aggregation and evaluation against manual labels."""

from .config import RunConfig, load_config
from .corpus import (
    ArtifactFile,
    CorpusError,
    ExploitArtifact,
    GroundTruthLabel,
    Maturity,
    RepoMeta,
    VulnerabilityRecord,
    WebDocument,
    load_corpus,
    load_labels,
)
from .pipeline import run_all
from .scoring import DEFAULT_WEIGHTS, RankedReport, Weights, score_exploit

__version__ = "0.1.0"

__all__ = [
    "ArtifactFile",
    "CorpusError",
    "DEFAULT_WEIGHTS",
    "ExploitArtifact",
    "GroundTruthLabel",
    "Maturity",
    "RankedReport",
    "RepoMeta",
    "RunConfig",
    "VulnerabilityRecord",
    "WebDocument",
    "Weights",
    "load_config",
    "load_corpus",
    "load_labels",
    "run_all",
    "score_exploit",
]
