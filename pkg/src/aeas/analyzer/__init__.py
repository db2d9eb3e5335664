"""Sub-feature extraction: retrieval, prompting, backends and response parsing."""

from .backends import AnalysisRequest, LiveBackend, RuleBackend, make_backend
from .extract import AnalyzerConfig, extract_features, filter_document, load_findings, save_findings
from .features import (
    Evidence,
    FeatureVector,
    PopularityInputs,
    Privilege,
    SubFeature,
    SubFeatureFinding,
)
from .parsing import FindingError, ParseError, RangeError, SchemaError, parse_finding, serialize_finding
from .prompts import PromptSpec, build_prompt
from .retrieval import Chunk, index_and_retrieve

__all__ = [
    "AnalysisRequest", "AnalyzerConfig", "Chunk", "Evidence", "FeatureVector", "FindingError",
    "LiveBackend", "ParseError", "PopularityInputs", "Privilege", "PromptSpec", "RangeError",
    "RuleBackend", "SchemaError", "SubFeature", "SubFeatureFinding", "build_prompt",
    "extract_features", "filter_document", "index_and_retrieve", "load_findings", "make_backend",
    "parse_finding", "save_findings", "serialize_finding",
]
