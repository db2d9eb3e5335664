import base64
import json
import threading

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aeas.connectors import (
    CompletionRequest,
    ConnectorError,
    DiskCache,
    LLMClient,
    NotFoundError,
    OfflineCacheMiss,
    RateLimitError,
    RepoClient,
    TransportError,
    cache_key,
)
from aeas.fixtures import REPOS_DIR


def chat_reply(text):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


class Recorder:
    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        r = self.responses.pop(0) if len(self.responses) > 1 else self.responses[0]
        if isinstance(r, Exception):
            raise r
        return r


def make_client(tmp_path, handler, **kw):
    kw.setdefault("offline", False)
    kw.setdefault("backoff_base", 0.0)
    return LLMClient(DiskCache(tmp_path / "cache"), base_url="http://llm.test/v1", api_key="k",
                     transport=httpx.MockTransport(handler), **kw)


def test_same_request_twice_served_from_cache(tmp_path):
    rec = Recorder([chat_reply("hello")])
    client = make_client(tmp_path, rec)
    req = CompletionRequest("prompt")
    assert client.complete(req) == "hello"
    assert client.network_calls == 1
    assert client.complete(req) == "hello"
    assert client.network_calls == 1
    assert len(rec.requests) == 1


def test_wire_format(tmp_path):
    rec = Recorder([chat_reply("x")])
    client = make_client(tmp_path, rec)
    client.complete(CompletionRequest("p", model_name="m", max_output_tokens=7, temperature=0.5))
    req = rec.requests[0]
    assert req.url == "http://llm.test/v1/chat/completions"
    assert req.headers["authorization"] == "Bearer k"
    assert json.loads(req.content) == {
        "model": "m", "messages": [{"role": "user", "content": "p"}], "max_tokens": 7, "temperature": 0.5,
    }


def test_temperature_changes_key():
    assert cache_key("m", "p", 0.0) != cache_key("m", "p", 0.7)
    assert CompletionRequest("p", temperature=0).cache_key() == CompletionRequest("p", temperature=0.0).cache_key()


def test_max_tokens_not_part_of_key():
    assert CompletionRequest("p", max_output_tokens=10).cache_key() == CompletionRequest("p").cache_key()


@given(st.text(), st.text(), st.floats(0, 2, allow_nan=False), st.text(), st.text(), st.floats(0, 2, allow_nan=False))
def test_key_equality_iff_inputs_equal(m1, p1, t1, m2, p2, t2):
    same = (m1, p1, float(t1)) == (m2, p2, float(t2))
    assert (cache_key(m1, p1, t1) == cache_key(m2, p2, t2)) == same


def test_key_is_stable_hash():
    # canonical encoding: JSON array [model, prompt, repr(float(temperature))]
    assert cache_key("m", "p", 0) == (
        __import__("hashlib").sha256(b'["m","p","0.0"]').hexdigest()
    )


def test_offline_cache_miss(tmp_path):
    client = make_client(tmp_path, Recorder([chat_reply("x")]), offline=True)
    with pytest.raises(OfflineCacheMiss, match="offline and uncached"):
        client.complete(CompletionRequest("p"))
    assert client.network_calls == 0


def test_offline_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("AEAS_OFFLINE", "1")
    client = LLMClient(DiskCache(tmp_path), transport=httpx.MockTransport(Recorder([chat_reply("x")])))
    assert client.offline
    with pytest.raises(OfflineCacheMiss):
        client.complete(CompletionRequest("p"))


def test_env_base_url_and_key(tmp_path, monkeypatch):
    monkeypatch.setenv("AEAS_API_BASE_URL", "http://env.test/v9/")
    monkeypatch.setenv("AEAS_API_KEY", "secret")
    rec = Recorder([chat_reply("x")])
    client = LLMClient(DiskCache(tmp_path), offline=False, transport=httpx.MockTransport(rec))
    client.complete(CompletionRequest("p"))
    assert str(rec.requests[0].url) == "http://env.test/v9/chat/completions"
    assert rec.requests[0].headers["authorization"] == "Bearer secret"


def test_offline_serves_warm_cache(tmp_path):
    online = make_client(tmp_path, Recorder([chat_reply("warm")]))
    online.complete(CompletionRequest("p"))
    offline = make_client(tmp_path, Recorder([httpx.Response(500)]), offline=True)
    assert offline.complete(CompletionRequest("p")) == "warm"
    assert offline.network_calls == 0


def test_retries_then_succeeds(tmp_path):
    rec = Recorder([httpx.Response(503), httpx.Response(429), chat_reply("ok")])
    client = make_client(tmp_path, rec)
    assert client.complete(CompletionRequest("p")) == "ok"
    assert client.network_calls == 3


def test_transport_error_carries_attempts(tmp_path):
    rec = Recorder([httpx.ConnectError("boom")])
    client = make_client(tmp_path, rec)
    with pytest.raises(TransportError) as exc:
        client.complete(CompletionRequest("p"))
    assert exc.value.attempts == 3
    assert client.network_calls == 3
    assert not list((tmp_path / "cache").rglob("*.json"))


def test_non_json_payload(tmp_path):
    client = make_client(tmp_path, Recorder([httpx.Response(200, text="<html>oops</html>")]))
    with pytest.raises(ConnectorError, match="not JSON"):
        client.complete(CompletionRequest("p"))


def test_client_error_not_retried(tmp_path):
    rec = Recorder([httpx.Response(401, text="bad key")])
    client = make_client(tmp_path, rec)
    with pytest.raises(ConnectorError, match="401"):
        client.complete(CompletionRequest("p"))
    assert client.network_calls == 1


def test_missing_content(tmp_path):
    client = make_client(tmp_path, Recorder([httpx.Response(200, json={"choices": []})]))
    with pytest.raises(ConnectorError, match="choices"):
        client.complete(CompletionRequest("p"))


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("")
    with pytest.raises(ValueError):
        CompletionRequest("p", temperature=-0.1)


def test_cache_layout_and_write_once(tmp_path):
    cache = DiskCache(tmp_path)
    key = cache_key("m", "p", 0.0)
    first = cache.put(key, "one")
    assert (tmp_path / key[:2] / f"{key}.json").is_file()
    second = cache.put(key, "two")
    assert second.response_text == "one" and second.stored_at == first.stored_at
    assert not list(tmp_path.rglob(".tmp-*"))


def test_concurrent_writers_agree(tmp_path):
    cache = DiskCache(tmp_path)
    key = cache_key("m", "race", 0.0)
    results = []

    def put(i):
        results.append(cache.put(key, f"v{i}").response_text)

    threads = [threading.Thread(target=put, args=(i,)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    stored = cache.get(key).response_text
    assert stored in {f"v{i}" for i in range(16)}
    assert json.loads(cache.path_for(key).read_text())["response_text"] == stored


def test_in_flight_cap(tmp_path):
    active, peak = [0], [0]
    lock = threading.Lock()
    gate = threading.Event()

    def handler(request):
        with lock:
            active[0] += 1
            peak[0] = max(peak[0], active[0])
        gate.wait(0.05)
        with lock:
            active[0] -= 1
        return chat_reply("x")

    client = make_client(tmp_path, handler, max_in_flight=2)
    threads = [threading.Thread(target=client.complete, args=(CompletionRequest(f"p{i}"),)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.network_calls == 8
    assert peak[0] <= 2


# --- repository client ---------------------------------------------------------

def test_fixture_repo_offline():
    client = RepoClient(fixture_dir=REPOS_DIR, offline=True)
    meta, files = client.fetch_repo("octo/poc-demo")
    assert (meta.stars, meta.forks) == (77, 11)
    assert {f.path: f.kind for f in files} == {"README.md": "readme", "exploit.py": "source", "pom.xml": "config"}


def test_fixture_binary_only_repo():
    meta, files = RepoClient(fixture_dir=REPOS_DIR, offline=True).fetch_repo("octo/binary-only")
    assert [(f.path, f.kind, f.text) for f in files] == [("payload.bin", "binary", None)]


def test_unknown_repo_offline():
    with pytest.raises(NotFoundError):
        RepoClient(fixture_dir=REPOS_DIR, offline=True).fetch_repo("octo/missing")


def _github(routes):
    def handler(request):
        for prefix, response in routes.items():
            if request.url.path.startswith(prefix):
                return response() if callable(response) else response
        return httpx.Response(404, json={"message": "Not Found"})
    return httpx.MockTransport(handler)


def test_remote_repo():
    readme = base64.b64encode(b"# demo\n").decode()
    transport = _github({
        "/repos/o/r/git/trees/main": httpx.Response(200, json={"tree": [
            {"path": "README.md", "type": "blob", "sha": "s1", "size": 7},
            {"path": "payload.bin", "type": "blob", "sha": "s2", "size": 100},
            {"path": "docs", "type": "tree", "sha": "s3"},
        ]}),
        "/repos/o/r/git/blobs/s1": httpx.Response(200, json={"content": readme, "encoding": "base64"}),
        "/repos/o/r": httpx.Response(200, json={
            "full_name": "o/r", "description": "abc", "open_issues_count": 2, "topics": ["cve"], "size": 3,
            "stargazers_count": 5, "forks_count": 1, "created_at": "2024-01-01T00:00:00Z",
            "default_branch": "main",
        }),
    })
    client = RepoClient(offline=False, transport=transport, base_url="http://gh.test")
    meta, files = client.fetch_repo("o/r")
    assert (meta.description_len, meta.issue_count, meta.size_bytes, meta.stars) == (3, 2, 3072, 5)
    assert [(f.path, f.kind, f.text) for f in files] == [("README.md", "readme", "# demo\n"),
                                                         ("payload.bin", "binary", None)]
    assert client.network_calls == 3


def test_remote_404():
    client = RepoClient(offline=False, transport=_github({}), base_url="http://gh.test")
    with pytest.raises(NotFoundError):
        client.fetch_repo("o/none")


@pytest.mark.parametrize("response,expected", [
    (httpx.Response(429, headers={"retry-after": "12"}), 12.0),
    (httpx.Response(403, headers={"x-ratelimit-remaining": "0", "retry-after": "30"}), 30.0),
])
def test_remote_rate_limit(response, expected):
    client = RepoClient(offline=False, transport=_github({"/repos": response}), base_url="http://gh.test")
    with pytest.raises(RateLimitError) as exc:
        client.fetch_repo("o/r")
    assert exc.value.retry_after == expected
