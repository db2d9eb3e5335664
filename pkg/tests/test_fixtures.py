import json

import httpx

from aeas.analyzer.backends import LiveBackend
from aeas.connectors import DiskCache, LLMClient
from aeas.fixtures import (
    CACHE_DIR,
    EXPECTED_PATH,
    MANIFEST_VERSION,
    compare_expected,
    load_expected,
    load_fixture_config,
    record_cache,
    verify_fixtures,
)
from aeas.scoring import Weights


def test_verify_fixtures_passes():
    assert verify_fixtures() == []


def test_expected_manifest_shape():
    data = load_expected()
    assert data["version"] == MANIFEST_VERSION
    assert set(data) == {"version", "expected_rankings", "expected_severities", "expected_scores"}
    assert len(data["expected_rankings"]) == 6


def test_zero_exploit_cve():
    data = load_expected()
    assert data["expected_severities"]["CVE-2024-31005"] == 0.0
    assert data["expected_rankings"]["CVE-2024-31005"] == []


def test_perturbed_weights_diverge():
    cfg = load_fixture_config()
    heavy_pop = Weights(feature_alpha=(0.1, 0.1, 0.1, 0.1, 0.6))
    cfg = cfg.with_overrides(weights=heavy_pop)
    diffs = verify_fixtures(cfg)
    assert diffs and any("actionability" in d for d in diffs)


def test_compare_reports_ranking_and_version():
    base = load_expected()
    other = json.loads(json.dumps(base))
    other["version"] = "0"
    other["expected_rankings"]["CVE-2024-31001"] = list(reversed(base["expected_rankings"]["CVE-2024-31001"]))
    diffs = compare_expected(base, other)
    assert any(d.startswith("version") for d in diffs)
    assert any("CVE-2024-31001 ranking" in d for d in diffs)


def test_shipped_cache_replays_without_network():
    calls = []

    def refuse(request):
        calls.append(request)
        return httpx.Response(500)

    client = LLMClient(DiskCache(CACHE_DIR), base_url="http://no.invalid", api_key="x", offline=False,
                       transport=httpx.MockTransport(refuse), backoff_base=0.0)
    c = load_fixture_config().connectors
    backend = LiveBackend(client, model_name=c.model_name, temperature=c.temperature,
                          max_output_tokens=c.max_output_tokens)
    try:
        assert verify_fixtures(backend=backend) == []
    finally:
        client.close()
    assert calls == [] and client.network_calls == 0


def test_record_cache_reproduces_shipped_entries(tmp_path):
    n = record_cache(tmp_path)
    shipped = {p.name: json.loads(p.read_text())["response_text"] for p in CACHE_DIR.rglob("*.json")}
    fresh = {p.name: json.loads(p.read_text())["response_text"] for p in tmp_path.rglob("*.json")}
    assert n == len(fresh) == len(shipped)
    assert fresh == shipped


def test_expected_file_is_canonical_json():
    text = EXPECTED_PATH.read_text()
    assert text == json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n"
