"""Bundled synthetic corpus for offline end-to-end runs.

Layout::

    corpus/          six CVEs in the standard corpus layout
    repos/           offline fixtures for :class:`aeas.connectors.RepoClient`
    cache/           recorded completions replayable by the live backend
    config.json      default run config (pins ``as_of``)
    labels.jsonl     manual-execution labels
    epss.csv         baseline scores, already in [0, 1]
    cvss.csv         baseline scores on the 0-10 scale
    expected.json    golden rankings and severities under the rules backend

Every "exploit" here is inert text shaped like exploit code.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Optional

import httpx

FIXTURE_ROOT = Path(__file__).resolve().parent
CORPUS_DIR = FIXTURE_ROOT / "corpus"
REPOS_DIR = FIXTURE_ROOT / "repos"
CACHE_DIR = FIXTURE_ROOT / "cache"
CONFIG_PATH = FIXTURE_ROOT / "config.json"
LABELS_PATH = FIXTURE_ROOT / "labels.jsonl"
EPSS_PATH = FIXTURE_ROOT / "epss.csv"
CVSS_PATH = FIXTURE_ROOT / "cvss.csv"
EXPECTED_PATH = FIXTURE_ROOT / "expected.json"

MANIFEST_VERSION = "1"
TOLERANCE = 1e-12


def load_fixture_config(**overrides):
    from ..config import load_config

    return load_config(CONFIG_PATH).with_overrides(**overrides)


def load_fixture_corpus():
    from ..corpus import load_corpus

    return load_corpus(CORPUS_DIR)


def _run(cfg, backend=None):
    from ..analyzer.backends import RuleBackend
    from ..pipeline import run_all

    _, _, reports = run_all(load_fixture_corpus(), cfg, backend=backend or RuleBackend())
    return reports


def build_expected(cfg=None, backend=None) -> dict:
    """Expected rankings/severities as produced by the current code."""
    reports = _run(cfg or load_fixture_config(), backend)
    return {
        "version": MANIFEST_VERSION,
        "expected_rankings": {r.cve_id: r.ranking() for r in reports},
        "expected_severities": {r.cve_id: r.severity for r in reports},
        "expected_scores": {r.cve_id: {s.artifact_id: s.actionability for s in r.exploits} for r in reports},
    }


def write_expected(path: Path = EXPECTED_PATH) -> dict:
    data = build_expected()
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return data


def load_expected(path: Path = EXPECTED_PATH) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def compare_expected(expected: dict, actual: dict) -> list[str]:
    out = []
    if expected.get("version") != actual.get("version"):
        out.append(f"version: expected {expected.get('version')!r}, got {actual.get('version')!r}")
    for cve in sorted(set(expected["expected_rankings"]) | set(actual["expected_rankings"])):
        want = expected["expected_rankings"].get(cve)
        got = actual["expected_rankings"].get(cve)
        if want != got:
            out.append(f"{cve} ranking: expected {want}, got {got}")
        ws = expected["expected_severities"].get(cve)
        gs = actual["expected_severities"].get(cve)
        if ws is None or gs is None or abs(ws - gs) > TOLERANCE:
            out.append(f"{cve} severity: expected {ws}, got {gs}")
        want_scores = expected.get("expected_scores", {}).get(cve, {})
        got_scores = actual.get("expected_scores", {}).get(cve, {})
        for aid in sorted(set(want_scores) | set(got_scores)):
            a, b = want_scores.get(aid), got_scores.get(aid)
            if a is None or b is None or abs(a - b) > TOLERANCE:
                out.append(f"{cve}/{aid} actionability: expected {a}, got {b}")
    return out


def verify_fixtures(cfg=None, backend=None, expected_path: Path = EXPECTED_PATH) -> list[str]:
    """Run the full pipeline on the fixtures; an empty list means pass."""
    return compare_expected(load_expected(expected_path), build_expected(cfg, backend))


def record_cache(cache_dir: Path = CACHE_DIR, cfg=None) -> int:
    """Populate a completion cache by running the live backend against a
    mock endpoint that answers every prompt with the rules backend.

    Returns the number of completions served.
    """
    from ..analyzer.backends import FILTER_PROMPT, LiveBackend, RuleBackend
    from ..connectors import DiskCache, LLMClient
    from ..pipeline import run_all

    cfg = cfg or load_fixture_config()
    rules = RuleBackend()
    pending: dict[str, str] = {}
    served = []

    def handler(request: httpx.Request) -> httpx.Response:
        prompt = json.loads(request.content)["messages"][0]["content"]
        served.append(prompt)
        return httpx.Response(200, json={"choices": [{"message": {"content": pending[prompt]}}]})

    c = cfg.connectors
    client = LLMClient(DiskCache(cache_dir), base_url="http://recorder.invalid", api_key="fixture",
                       offline=False, transport=httpx.MockTransport(handler))
    live = LiveBackend(client, model_name=c.model_name, temperature=c.temperature,
                       max_output_tokens=c.max_output_tokens)

    class _Recorder:
        name = "live"

        def analyze(self, request):
            pending[request.prompt] = rules.analyze(request)
            return live.analyze(request)

        def judge_document(self, text):
            pending[FILTER_PROMPT.format(document=text[: live.max_document_chars])] = rules.judge_document(text)
            return live.judge_document(text)

    try:
        run_all(load_fixture_corpus(), replace(cfg, concurrency_cap=1), backend=_Recorder())
    finally:
        client.close()
    return len(served)


def main(argv: Optional[list] = None) -> int:
    """Regenerate expected.json and the recorded cache: ``python3 -m aeas.fixtures``."""
    n = record_cache()
    write_expected()
    print(f"recorded {n} completions; wrote {EXPECTED_PATH.name}")
    return 0
