"""Per-artifact feature extraction and document noise filtering."""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..corpus import ExploitArtifact, WebDocument
from .backends import AnalysisRequest, Backend
from .features import FeatureVector, SubFeature, SubFeatureFinding, default_finding
from .parsing import FindingError, ParseError, SchemaError, parse_finding
from .prompts import TASKS, build_prompt, retry_suffix
from .retrieval import CHUNK_OVERLAP, CHUNK_WORDS, LexicalIndex, chunk_documents

logger = logging.getLogger(__name__)

FINDINGS_FILE = "findings.json"


@dataclass(frozen=True)
class AnalyzerConfig:
    retries: int = 2
    top_k_snippets: int = 4
    chunk_words: int = CHUNK_WORDS
    chunk_overlap: int = CHUNK_OVERLAP
    max_workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "AnalyzerConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "retries": self.retries,
            "top_k_snippets": self.top_k_snippets,
            "chunk_words": self.chunk_words,
            "chunk_overlap": self.chunk_overlap,
            "max_workers": self.max_workers,
        }


def _has_text(artifact: ExploitArtifact) -> bool:
    return any(f.text and f.text.strip() for f in artifact.textual_files()) or any(
        d.text.strip() for d in artifact.docs
    )


def _check_evidence(finding: SubFeatureFinding, artifact: ExploitArtifact) -> SubFeatureFinding:
    known = {f.path for f in artifact.files} | {d.url for d in artifact.docs}
    kept = tuple(e for e in finding.evidence if e.file in known)
    if len(kept) != len(finding.evidence):
        logger.info("%s/%s: dropped %d evidence entries citing unknown files", artifact.artifact_id,
                    finding.subfeature.value, len(finding.evidence) - len(kept))
        finding = SubFeatureFinding(finding.subfeature, finding.conclusion, finding.confidence, kept)
    return finding


def extract_one(sf: SubFeature, artifact: ExploitArtifact, backend: Backend, prompt: str,
                retries: int = 2, cve_id: str = "", application: str = "") -> SubFeatureFinding:
    """Query the backend, re-prompting with the error after each failure.

    After ``retries`` failed re-prompts the conservative default is returned.
    """
    current = prompt
    for attempt in range(retries + 1):
        try:
            raw = backend.analyze(AnalysisRequest(sf, artifact, current, cve_id, application))
            return _check_evidence(parse_finding(raw, sf), artifact)
        except FindingError as exc:
            error: Exception = exc
        except Exception as exc:  # backend/transport failure
            error = exc
        logger.warning("%s/%s attempt %d failed: %s", artifact.artifact_id, sf.value, attempt + 1, error)
        current = prompt + retry_suffix(error)
    logger.warning("%s/%s: retries exhausted, using conservative default", artifact.artifact_id, sf.value)
    return default_finding(sf)


def extract_features(artifact: ExploitArtifact, backend: Backend, cfg: AnalyzerConfig = AnalyzerConfig(),
                     cve_id: str = "", application: str = "") -> FeatureVector:
    """One finding per sub-feature; never raises on backend failure."""
    if not _has_text(artifact):
        return FeatureVector({sf: default_finding(sf) for sf in SubFeature})

    documents = [(f.path, f.text) for f in artifact.textual_files()] + [(d.url, d.text) for d in artifact.docs]
    index = LexicalIndex(chunk_documents(documents, cfg.chunk_words, cfg.chunk_overlap))

    def run(sf: SubFeature) -> SubFeatureFinding:
        snippets = index.search(TASKS[sf].query, cfg.top_k_snippets)
        prompt = build_prompt(sf, artifact, snippets, cve_id, application)
        return extract_one(sf, artifact, backend, prompt, cfg.retries, cve_id, application)

    subfeatures = list(SubFeature)
    if cfg.max_workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            results = list(pool.map(run, subfeatures))
    else:
        results = [run(sf) for sf in subfeatures]
    return FeatureVector(dict(zip(subfeatures, results)))


_CODE_BLOCK = re.compile(r"```|<pre\b|<code\b|^(?: {4}|\t)\S", re.M | re.I)


def filter_document(doc, backend: Backend) -> bool:
    """True to keep the document.

    Empty documents are dropped and documents carrying code blocks kept
    without consulting the backend; everything else is judged by it.  An
    unusable judgement drops the document.
    """
    text = doc.text if isinstance(doc, WebDocument) else doc
    if not text or not text.strip():
        return False
    if _CODE_BLOCK.search(text):
        return True
    try:
        raw = backend.judge_document(text)
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        logger.warning("document judgement is not JSON: %s", ParseError(str(exc)))
        return False
    except Exception as exc:
        logger.warning("document judgement failed: %s", exc)
        return False
    if not isinstance(obj, dict) or not isinstance(obj.get("keep"), bool):
        logger.warning("document judgement malformed: %s", SchemaError("expected {'keep': bool}"))
        return False
    return obj["keep"]


def save_findings(fv: FeatureVector, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(fv.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_findings(path) -> FeatureVector:
    with open(path, encoding="utf-8") as fh:
        return FeatureVector.from_dict(json.load(fh))
