"""Stage functions: filter -> extract -> score.

Each stage reads the previous stage's persisted output so commands can be
re-run independently.  Output files under the run directory::

    manifest.json
    findings/<CVE-ID>/<artifact-id>/findings.json
    scores.json
    report.md
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

from .analyzer.backends import make_backend
from .analyzer.extract import FINDINGS_FILE, AnalyzerConfig, extract_features, filter_document, load_findings, save_findings
from .analyzer.features import FeatureVector, PopularityInputs
from .config import RunConfig
from .connectors import DiskCache, LLMClient
from .corpus import ExploitArtifact, VulnerabilityRecord, WebDocument, format_timestamp
from .evalkit import (
    RankingCase,
    precision_at_k,
    random_select_top_k,
    recall_k_for_top_j,
    score_agreement,
    top_k_success,
)
from .prefilter import (
    FilterConfig,
    confidence_score,
    extract_main_content,
    file_filter,
    prioritize,
    quality_score,
    repo_signals,
    within_size_bounds,
)
from .scoring import RankedReport, Weights, render_markdown, reports_to_json, score_exploit

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
FINDINGS_DIR = "findings"
SCORES_FILE = "scores.json"
REPORT_FILE = "report.md"
METRICS_FILE = "metrics.json"


class StageError(RuntimeError):
    pass


def relevant_topics(record: VulnerabilityRecord, cfg: FilterConfig) -> frozenset:
    app = record.application.lower()
    words = set(re.findall(r"[a-z0-9]+", app))
    extra = {record.cve_id.lower(), app.replace(" ", "-"), app.replace(" ", "")} | words
    return cfg.relevant_topics | {x for x in extra if x}


def filter_record(record: VulnerabilityRecord, cfg: FilterConfig, now: datetime) -> dict:
    topics = relevant_topics(record, cfg)
    rows = {}
    sized = []
    for art in record.exploits:
        conf = confidence_score(repo_signals(art.repo, topics, cfg), cfg)
        rows[art.artifact_id] = {
            "artifact_id": art.artifact_id,
            "repo_id": art.repo.repo_id,
            "confidence": conf,
            "quality": quality_score(art.repo, now, cfg),
        }
        if within_size_bounds(art.repo, cfg):
            sized.append(art)
        else:
            rows[art.artifact_id]["reason"] = "size outside bounds"
    by_repo = {id(a.repo): a for a in sized}
    ordered = prioritize([a.repo for a in sized], now, cfg, top_n=None, relevant_topics=topics)
    kept_ids = [by_repo[id(r)].artifact_id for r in ordered]
    if cfg.top_n is not None:
        for aid in kept_ids[cfg.top_n:]:
            rows[aid]["reason"] = "beyond top_n"
        kept_ids = kept_ids[: cfg.top_n]
    for art in sized:
        if art.artifact_id not in kept_ids and "reason" not in rows[art.artifact_id]:
            rows[art.artifact_id]["reason"] = "confidence below threshold"
    kept = [rows[aid] for aid in kept_ids]
    dropped = sorted((rows[a.artifact_id] for a in record.exploits if a.artifact_id not in kept_ids),
                     key=lambda r: r["artifact_id"])
    return {"cve_id": record.cve_id, "kept": kept, "dropped": dropped}


def filter_corpus(corpus: Sequence[VulnerabilityRecord], cfg: FilterConfig, now: datetime) -> dict:
    return {
        "as_of": format_timestamp(now),
        "vulnerabilities": [filter_record(r, cfg, now) for r in corpus],
    }


def kept_artifacts(manifest: dict, record: VulnerabilityRecord) -> list[ExploitArtifact]:
    entry = next((v for v in manifest["vulnerabilities"] if v["cve_id"] == record.cve_id), None)
    if entry is None:
        raise StageError(f"{record.cve_id} missing from manifest; re-run `aeas filter`")
    by_id = {a.artifact_id: a for a in record.exploits}
    missing = [k["artifact_id"] for k in entry["kept"] if k["artifact_id"] not in by_id]
    if missing:
        raise StageError(f"{record.cve_id}: manifest lists unknown artifacts {missing}; re-run `aeas filter`")
    return [by_id[k["artifact_id"]] for k in entry["kept"]]


def prepare_artifact(artifact: ExploitArtifact, backend, cfg: FilterConfig) -> ExploitArtifact:
    """Drop non-informative files; reduce web documents to main content and drop noise."""
    files = tuple(f for f in artifact.files if file_filter(f.path, f.kind, cfg))
    docs = []
    for doc in artifact.docs:
        text = extract_main_content(doc.text)
        if filter_document(text, backend):
            docs.append(WebDocument(doc.url, text))
        else:
            logger.info("%s: dropped document %s", artifact.artifact_id, doc.url)
    return replace(artifact, files=files, docs=tuple(docs))


def make_run_backend(cfg: RunConfig):
    if cfg.backend == "rules":
        return make_backend("rules")
    if cfg.cache_dir is None:
        raise StageError("the live backend needs a cache directory (--cache-dir or cache_dir in config)")
    c = cfg.connectors
    client = LLMClient(DiskCache(cfg.cache_dir), base_url=c.base_url, offline=c.offline,
                       max_in_flight=cfg.concurrency_cap)
    return make_backend("live", client, model_name=c.model_name, temperature=c.temperature,
                        max_output_tokens=c.max_output_tokens)


def extract_corpus(corpus: Sequence[VulnerabilityRecord], manifest: dict, backend,
                   filter_cfg: FilterConfig = FilterConfig(), analyzer_cfg: AnalyzerConfig = AnalyzerConfig(),
                   concurrency: int = 1) -> dict[tuple[str, str], FeatureVector]:
    jobs = [(rec, art) for rec in corpus for art in kept_artifacts(manifest, rec)]

    def run(job):
        rec, art = job
        prepared = prepare_artifact(art, backend, filter_cfg)
        return extract_features(prepared, backend, analyzer_cfg, rec.cve_id, rec.application)

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    return {(rec.cve_id, art.artifact_id): fv for (rec, art), fv in zip(jobs, results)}


def score_corpus(corpus: Sequence[VulnerabilityRecord], manifest: dict,
                 findings: dict[tuple[str, str], FeatureVector], weights: Weights = Weights()) -> list[RankedReport]:
    reports = []
    for rec in corpus:
        kept = kept_artifacts(manifest, rec)
        scores = []
        for art in kept:
            key = (rec.cve_id, art.artifact_id)
            if key not in findings:
                raise StageError(f"no findings for {rec.cve_id}/{art.artifact_id}; run `aeas extract` first")
            pop = PopularityInputs(n_exploits=len(kept), stars=art.repo.stars, forks=art.repo.forks)
            scores.append(score_exploit(findings[key], pop, weights, art.artifact_id))
        reports.append(RankedReport.build(rec.cve_id, scores))
    return reports


# --- persisted stage outputs ---------------------------------------------------

def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_manifest(out_dir: Path) -> dict:
    path = Path(out_dir) / MANIFEST_FILE
    if not path.exists():
        raise StageError(f"{path} not found; run `aeas filter` first")
    return json.loads(path.read_text(encoding="utf-8"))


def findings_path(out_dir: Path, cve_id: str, artifact_id: str) -> Path:
    return Path(out_dir) / FINDINGS_DIR / cve_id / artifact_id / FINDINGS_FILE


def write_findings(out_dir: Path, findings: dict) -> None:
    for (cve, aid), fv in sorted(findings.items()):
        save_findings(fv, findings_path(out_dir, cve, aid))


def read_findings(out_dir: Path, corpus, manifest) -> dict:
    findings = {}
    for rec in corpus:
        for art in kept_artifacts(manifest, rec):
            path = findings_path(out_dir, rec.cve_id, art.artifact_id)
            if not path.exists():
                raise StageError(f"missing findings {path}; run `aeas extract` first")
            findings[(rec.cve_id, art.artifact_id)] = load_findings(path)
    return findings


def write_reports(out_dir: Path, reports: Sequence[RankedReport]) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / SCORES_FILE).write_text(reports_to_json(reports), encoding="utf-8")
    (out_dir / REPORT_FILE).write_text(render_markdown(reports), encoding="utf-8")


def run_all(corpus, cfg: RunConfig, backend=None, out_dir: Optional[Path] = None):
    """Filter, extract and score in memory; optionally persist every stage."""
    backend = backend or make_run_backend(cfg)
    manifest = filter_corpus(corpus, cfg.filter, cfg.reference_time())
    findings = extract_corpus(corpus, manifest, backend, cfg.filter, cfg.analyzer, cfg.concurrency_cap)
    reports = score_corpus(corpus, manifest, findings, cfg.weights)
    if out_dir is not None:
        write_json(Path(out_dir) / MANIFEST_FILE, manifest)
        write_findings(out_dir, findings)
        write_reports(out_dir, reports)
    return manifest, findings, reports


# --- evaluation inputs ----------------------------------------------------------

def ranking_cases(reports: Sequence[RankedReport], manifest: dict, labels) -> list[RankingCase]:
    """One case per CVE with labeled artifacts.

    Artifacts dropped by the prefilter rank after every scored artifact (in
    id order); unlabeled artifacts are left out of the case.
    """
    by_id = {lb.artifact_id: lb for lb in labels}
    dropped = {v["cve_id"]: sorted(d["artifact_id"] for d in v["dropped"]) for v in manifest["vulnerabilities"]}
    cases = []
    for rep in reports:
        order = [a for a in rep.ranking() + dropped.get(rep.cve_id, []) if a in by_id]
        if order:
            cases.append(RankingCase(rep.cve_id, tuple(order), {a: by_id[a] for a in order}))
    return cases


def evaluate(reports: Sequence[RankedReport], manifest: dict, labels, baselines: dict,
             ks: Sequence[int] = (1, 3)) -> dict:
    """Ranking metrics and score agreement against each named baseline."""
    cases = ranking_cases(reports, manifest, labels)
    ranking = {"n_cases": len(cases), "n_with_functional": sum(c.has_functional() for c in cases), "by_k": {}}
    for k in ks:
        row = {}
        for name, fn in (("top_k_success", top_k_success), ("random_select", random_select_top_k),
                         ("precision_at_k", precision_at_k)):
            try:
                row[name] = fn(cases, k)
            except ValueError:
                row[name] = None
        try:
            row["recall_k_top_j"] = recall_k_for_top_j(cases, k, k)
        except ValueError:
            row["recall_k_top_j"] = None
        ranking["by_k"][str(k)] = row
    severities = {r.cve_id: r.severity for r in reports}
    agreement = {}
    for name, scores in sorted(baselines.items()):
        common = sorted(set(severities) & set(scores))
        entry = {"n": len(common)}
        if len(common) >= 2:
            entry.update(score_agreement([scores[c] for c in common], [severities[c] for c in common]).to_dict())
        agreement[name] = entry
    return {"ranking": ranking, "agreement": agreement}
