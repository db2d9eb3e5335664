"""Network clients with a deterministic disk cache and an offline mode.

Two clients live here: :class:`RepoClient` for a GitHub-style code-hosting
API and :class:`LLMClient` for a chat-completion API.  Both accept an
``httpx`` transport so tests can swap in an instrumented one.

Environment variables: ``AEAS_API_KEY``, ``AEAS_API_BASE_URL``,
``AEAS_OFFLINE=1``.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import random
import tempfile
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import httpx

from .corpus import (
    REPO_FILE,
    TEXTUAL_KINDS,
    ArtifactFile,
    RepoMeta,
    _load_artifact,
    classify_kind,
    format_timestamp,
    parse_timestamp,
)

logger = logging.getLogger(__name__)

DEFAULT_LLM_BASE_URL = "https://api.openai.com/v1"
DEFAULT_REPO_BASE_URL = "https://api.github.com"
DEFAULT_MODEL = "gpt-4o-mini"
MAX_ATTEMPTS = 3
MAX_FILE_BYTES = 1_000_000


class ConnectorError(RuntimeError):
    pass


class NotFoundError(ConnectorError):
    pass


class RateLimitError(ConnectorError):
    """Retryable; ``retry_after`` is in seconds."""

    def __init__(self, message: str, retry_after: float):
        super().__init__(message)
        self.retry_after = retry_after


class TransportError(ConnectorError):
    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class OfflineCacheMiss(ConnectorError):
    def __init__(self, key: str):
        super().__init__(f"offline and uncached: {key}")
        self.key = key


def env_offline() -> bool:
    return os.environ.get("AEAS_OFFLINE", "").strip().lower() in {"1", "true", "yes"}


@dataclass(frozen=True)
class CompletionRequest:
    prompt_text: str
    model_name: str = DEFAULT_MODEL
    max_output_tokens: int = 1024
    temperature: float = 0.0

    def __post_init__(self):
        if not self.prompt_text:
            raise ValueError("prompt_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def cache_key(self) -> str:
        return cache_key(self.model_name, self.prompt_text, self.temperature)


def cache_key(model_name: str, prompt_text: str, temperature: float) -> str:
    # float() so 0 and 0.0 share a key; repr() is the shortest round-tripping form
    canonical = json.dumps(
        [model_name, prompt_text, repr(float(temperature))],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    response_text: str
    stored_at: datetime


class DiskCache:
    """Write-once response cache at ``<root>/<key[:2]>/<key>.json``."""

    def __init__(self, root):
        self.root = Path(root)

    def path_for(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[CacheEntry]:
        path = self.path_for(key)
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            return None
        return CacheEntry(
            key=data["key"],
            response_text=data["response_text"],
            stored_at=parse_timestamp(data["stored_at"]),
        )

    def put(self, key: str, response_text: str) -> CacheEntry:
        existing = self.get(key)
        if existing is not None:
            return existing
        entry = CacheEntry(key=key, response_text=response_text, stored_at=datetime.now(timezone.utc))
        path = self.path_for(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(
            {"key": key, "response_text": response_text, "stored_at": format_timestamp(entry.stored_at)},
            ensure_ascii=False,
            indent=1,
        )
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            if path.exists():
                os.unlink(tmp)
            else:
                os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return self.get(key) or entry


def _backoff(attempt: int, base: float) -> float:
    return base * (2 ** attempt) * (0.5 + random.random() / 2)


def _retry_after(response: httpx.Response) -> float:
    value = response.headers.get("retry-after")
    if value:
        try:
            return max(0.0, float(value))
        except ValueError:
            pass
    reset = response.headers.get("x-ratelimit-reset")
    if reset:
        try:
            return max(0.0, float(reset) - time.time())
        except ValueError:
            pass
    return 60.0


class LLMClient:
    """Chat-completion client.  Cache hits never touch the network.

    Wire format (POST ``{base_url}/chat/completions``)::

        {"model": ..., "messages": [{"role": "user", "content": prompt}],
         "max_tokens": ..., "temperature": ...}

    The response text is read from ``choices[0].message.content``.
    """

    def __init__(
        self,
        cache: DiskCache,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        offline: Optional[bool] = None,
        transport: Optional[httpx.BaseTransport] = None,
        max_attempts: int = MAX_ATTEMPTS,
        backoff_base: float = 1.0,
        max_in_flight: int = 4,
        timeout: float = 120.0,
    ):
        self.cache = cache
        self.base_url = (base_url or os.environ.get("AEAS_API_BASE_URL") or DEFAULT_LLM_BASE_URL).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("AEAS_API_KEY")
        self.offline = env_offline() if offline is None else offline
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.network_calls = 0
        self._lock = threading.Lock()
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))
        self._transport = transport
        self._timeout = timeout
        self._client: Optional[httpx.Client] = None

    def _http(self) -> httpx.Client:
        with self._lock:
            if self._client is None:
                headers = {"Content-Type": "application/json"}
                if self.api_key:
                    headers["Authorization"] = f"Bearer {self.api_key}"
                self._client = httpx.Client(transport=self._transport, headers=headers, timeout=self._timeout)
            return self._client

    def close(self):
        if self._client is not None:
            self._client.close()

    def complete(self, req: CompletionRequest) -> str:
        key = req.cache_key()
        hit = self.cache.get(key)
        if hit is not None:
            return hit.response_text
        if self.offline:
            raise OfflineCacheMiss(key)
        text = self._post(req)
        return self.cache.put(key, text).response_text

    def _post(self, req: CompletionRequest) -> str:
        body = {
            "model": req.model_name,
            "messages": [{"role": "user", "content": req.prompt_text}],
            "max_tokens": req.max_output_tokens,
            "temperature": req.temperature,
        }
        last_error = "no attempt made"
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(_backoff(attempt - 1, self.backoff_base))
            with self._slots:
                with self._lock:
                    self.network_calls += 1
                try:
                    resp = self._http().post(f"{self.base_url}/chat/completions", json=body)
                except httpx.HTTPError as exc:
                    last_error = f"transport failure: {exc}"
                    logger.warning("completion attempt %d failed: %s", attempt + 1, exc)
                    continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                logger.warning("completion attempt %d: %s", attempt + 1, last_error)
                continue
            if resp.status_code >= 400:
                raise ConnectorError(f"completion request rejected: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                payload = resp.json()
            except ValueError:
                raise ConnectorError("completion response is not JSON") from None
            try:
                content = payload["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise ConnectorError("completion response lacks choices[0].message.content") from None
            if not isinstance(content, str):
                raise ConnectorError("completion content is not a string")
            return content
        raise TransportError(last_error, self.max_attempts)


class RepoClient:
    """Fetches repository metadata and file trees.

    Offline, ``repo_id`` ``owner/name`` resolves to ``<fixture_dir>/owner__name``,
    a directory in the corpus artifact layout (``repo.json`` plus raw files).
    """

    def __init__(
        self,
        fixture_dir=None,
        token: Optional[str] = None,
        base_url: str = DEFAULT_REPO_BASE_URL,
        offline: Optional[bool] = None,
        transport: Optional[httpx.BaseTransport] = None,
        timeout: float = 30.0,
    ):
        self.fixture_dir = Path(fixture_dir) if fixture_dir else None
        self.token = token if token is not None else os.environ.get("GITHUB_TOKEN")
        self.base_url = base_url.rstrip("/")
        self.offline = env_offline() if offline is None else offline
        self.network_calls = 0
        headers = {"Accept": "application/vnd.github+json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        self._client = httpx.Client(transport=transport, headers=headers, timeout=timeout)

    def close(self):
        self._client.close()

    def fetch_repo(self, repo_id: str) -> tuple[RepoMeta, list[ArtifactFile]]:
        if self.offline:
            return self._fetch_fixture(repo_id)
        return self._fetch_remote(repo_id)

    def _fetch_fixture(self, repo_id: str):
        if self.fixture_dir is None:
            raise NotFoundError(f"{repo_id}: offline mode and no fixture directory configured")
        repo_dir = self.fixture_dir / repo_id.replace("/", "__")
        if not (repo_dir / REPO_FILE).is_file():
            raise NotFoundError(f"{repo_id}: not found in {self.fixture_dir}")
        artifact = _load_artifact(repo_dir)
        return artifact.repo, list(artifact.files)

    def _get(self, url: str, **params) -> httpx.Response:
        self.network_calls += 1
        resp = self._client.get(url, params=params or None)
        if resp.status_code == 404:
            raise NotFoundError(f"not found: {url}")
        if resp.status_code == 429 or (
            resp.status_code == 403 and resp.headers.get("x-ratelimit-remaining") == "0"
        ):
            raise RateLimitError(f"rate limited: {url}", _retry_after(resp))
        if resp.status_code >= 400:
            raise ConnectorError(f"HTTP {resp.status_code} for {url}")
        return resp

    def _fetch_remote(self, repo_id: str):
        info = self._get(f"{self.base_url}/repos/{repo_id}").json()
        meta = RepoMeta(
            repo_id=info.get("full_name", repo_id),
            description_len=len(info.get("description") or ""),
            issue_count=int(info.get("open_issues_count", 0)),
            topic_labels=tuple(info.get("topics", ())),
            size_bytes=int(info.get("size", 0)) * 1024,  # API reports KiB
            stars=int(info.get("stargazers_count", 0)),
            forks=int(info.get("forks_count", 0)),
            created_at=parse_timestamp(info["created_at"]),
        )
        branch = info.get("default_branch", "main")
        tree = self._get(f"{self.base_url}/repos/{repo_id}/git/trees/{branch}", recursive="1").json()
        files = []
        for node in tree.get("tree", ()):
            if node.get("type") != "blob":
                continue
            path = node["path"]
            kind = classify_kind(path)
            text = None
            if kind in TEXTUAL_KINDS:
                if node.get("size", 0) > MAX_FILE_BYTES:
                    continue
                blob = self._get(f"{self.base_url}/repos/{repo_id}/git/blobs/{node['sha']}").json()
                raw = base64.b64decode(blob.get("content", "")) if blob.get("encoding") == "base64" else (
                    blob.get("content", "").encode("utf-8")
                )
                kind = classify_kind(path, raw)
                if kind in TEXTUAL_KINDS:
                    text = raw.decode("utf-8", errors="replace")
            files.append(ArtifactFile(path=path, kind=kind, text=text))
        files.sort(key=lambda f: f.path)
        return meta, files
