"""Data model and on-disk corpus loading.

Layout::

    <root>/<CVE-ID>/meta.json
    <root>/<CVE-ID>/artifacts/<artifact-id>/repo.json
    <root>/<CVE-ID>/artifacts/<artifact-id>/<raw files...>

Labels live in a separate JSON Lines file, one object per line.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)

CVE_PATTERN = re.compile(r"^CVE-\d{4}-\d{4,}$")

SOURCE, README, DOC, BINARY, MEDIA, CONFIG = "source", "readme", "doc", "binary", "media", "config"
FILE_KINDS = (SOURCE, README, DOC, BINARY, MEDIA, CONFIG)
TEXTUAL_KINDS = frozenset({SOURCE, README, DOC})

SOURCE_EXTENSIONS = frozenset({
    ".py", ".rb", ".pl", ".php", ".js", ".ts", ".go", ".java", ".c", ".h", ".cc",
    ".cpp", ".hpp", ".cs", ".rs", ".sh", ".bash", ".ps1", ".lua", ".kt", ".scala",
    ".swift", ".nse", ".r", ".m", ".vbs", ".bat",
})
DOC_EXTENSIONS = frozenset({".md", ".txt", ".rst", ".html", ".htm", ".adoc"})
BINARY_EXTENSIONS = frozenset({
    ".bin", ".exe", ".dll", ".so", ".o", ".a", ".elf", ".jar", ".class", ".pyc",
    ".zip", ".gz", ".tar", ".tgz", ".7z", ".rar", ".deb", ".rpm", ".apk", ".dylib",
    ".pdf", ".msi", ".iso", ".img", ".dat",
})
MEDIA_EXTENSIONS = frozenset({
    ".png", ".jpg", ".jpeg", ".gif", ".bmp", ".svg", ".ico", ".webp", ".mp4",
    ".mov", ".avi", ".mkv", ".webm", ".mp3", ".wav", ".ogg", ".flac",
})
CONFIG_EXTENSIONS = frozenset({
    ".xml", ".json", ".yml", ".yaml", ".toml", ".ini", ".cfg", ".conf", ".lock",
    ".properties", ".gradle", ".plist",
})

META_FILE = "meta.json"
REPO_FILE = "repo.json"
ARTIFACTS_DIR = "artifacts"


class CorpusError(ValueError):
    """A corpus or label file violates the documented layout or an invariant."""


class Maturity(str, Enum):
    """Manually observed maturity of an exploit, worst to best."""

    NON_FUNCTIONAL = "NonFunctional"
    DOC_ONLY = "DocOnly"
    POC = "PoC"
    FUNCTIONAL = "Functional"

    @property
    def rank(self) -> int:
        return _MATURITY_RANK[self]


_MATURITY_RANK = {
    Maturity.NON_FUNCTIONAL: 0,
    Maturity.DOC_ONLY: 1,
    Maturity.POC: 2,
    Maturity.FUNCTIONAL: 3,
}


@dataclass(frozen=True)
class RepoMeta:
    repo_id: str
    description_len: int = 0
    issue_count: int = 0
    topic_labels: tuple[str, ...] = ()
    size_bytes: int = 0
    stars: int = 0
    forks: int = 0
    created_at: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)

    def __post_init__(self):
        for name in ("description_len", "issue_count", "size_bytes", "stars", "forks"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise CorpusError(f"repo {self.repo_id!r}: {name} must be a non-negative integer, got {value!r}")
        if self.created_at.tzinfo is None:
            raise CorpusError(f"repo {self.repo_id!r}: created_at must carry a timezone")
        if self.created_at > datetime.now(timezone.utc):
            raise CorpusError(f"repo {self.repo_id!r}: created_at is in the future")


@dataclass(frozen=True)
class ArtifactFile:
    path: str
    kind: str
    text: Optional[str] = None

    def __post_init__(self):
        if self.kind not in FILE_KINDS:
            raise CorpusError(f"file {self.path!r}: unknown kind {self.kind!r}")
        if (self.kind in TEXTUAL_KINDS) != (self.text is not None):
            raise CorpusError(f"file {self.path!r}: text content must be present iff kind is textual")

    @property
    def is_textual(self) -> bool:
        return self.kind in TEXTUAL_KINDS


@dataclass(frozen=True)
class WebDocument:
    url: str
    text: str


@dataclass(frozen=True)
class ExploitArtifact:
    artifact_id: str
    repo: RepoMeta
    files: tuple[ArtifactFile, ...] = ()
    docs: tuple[WebDocument, ...] = ()

    def textual_files(self) -> list[ArtifactFile]:
        return [f for f in self.files if f.is_textual]

    def file(self, path: str) -> Optional[ArtifactFile]:
        for f in self.files:
            if f.path == path:
                return f
        return None


@dataclass(frozen=True)
class VulnerabilityRecord:
    cve_id: str
    application: str
    published: date
    cvss: Optional[float] = None
    epss: Optional[float] = None
    exploits: tuple[ExploitArtifact, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not CVE_PATTERN.match(self.cve_id):
            raise CorpusError(f"cve_id {self.cve_id!r} does not match CVE-YYYY-NNNN")
        if self.cvss is not None and not 0.0 <= self.cvss <= 10.0:
            raise CorpusError(f"{self.cve_id}: cvss {self.cvss} outside [0, 10]")
        if self.epss is not None and not 0.0 <= self.epss <= 1.0:
            raise CorpusError(f"{self.cve_id}: epss {self.epss} outside [0, 1]")
        ids = [a.artifact_id for a in self.exploits]
        if len(ids) != len(set(ids)):
            raise CorpusError(f"{self.cve_id}: duplicate artifact_id")


@dataclass(frozen=True)
class GroundTruthLabel:
    artifact_id: str
    maturity_observed: Maturity
    completion_minutes: Optional[float] = None
    error_count: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.maturity_observed, Maturity):
            try:
                object.__setattr__(self, "maturity_observed", Maturity(self.maturity_observed))
            except ValueError:
                raise CorpusError(
                    f"label {self.artifact_id!r}: unknown maturity {self.maturity_observed!r}"
                ) from None
        if self.completion_minutes is not None and self.completion_minutes < 0:
            raise CorpusError(f"label {self.artifact_id!r}: completion_minutes must be >= 0")
        if self.error_count is not None and (
            isinstance(self.error_count, bool) or not isinstance(self.error_count, int) or self.error_count < 0
        ):
            raise CorpusError(f"label {self.artifact_id!r}: error_count must be a non-negative integer")


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp; a trailing ``Z`` means UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {value!r} has no UTC offset")
    return ts


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def classify_kind(path: str, content: Optional[bytes] = None) -> str:
    """Infer a file kind from its name, sniffing content for unknown extensions."""
    name = os.path.basename(path).lower()
    stem, ext = os.path.splitext(name)
    if stem.startswith("readme"):
        return README
    if ext in SOURCE_EXTENSIONS:
        return SOURCE
    if ext in DOC_EXTENSIONS:
        return DOC
    if ext in MEDIA_EXTENSIONS:
        return MEDIA
    if ext in BINARY_EXTENSIONS:
        return BINARY
    if ext in CONFIG_EXTENSIONS or name in {"dockerfile", "makefile", ".gitignore"}:
        return CONFIG
    if content is None:
        return DOC
    if b"\x00" in content[:8192]:
        return BINARY
    try:
        content.decode("utf-8")
    except UnicodeDecodeError:
        return BINARY
    return DOC


def _read_json(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CorpusError(f"{path}: expected a JSON object")
    return data


def _require(data: dict, key: str, path: Path):
    if key not in data:
        raise CorpusError(f"{path}: missing field {key!r}")
    return data[key]


def _repo_from_json(data: dict, path: Path) -> RepoMeta:
    try:
        return RepoMeta(
            repo_id=str(_require(data, "repo_id", path)),
            description_len=data.get("description_len", len(data.get("description", "") or "")),
            issue_count=data.get("issue_count", 0),
            topic_labels=tuple(data.get("topics", ())),
            size_bytes=data.get("size_bytes", 0),
            stars=data.get("stars", 0),
            forks=data.get("forks", 0),
            created_at=parse_timestamp(_require(data, "created_at", path)),
        )
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"{path}: {exc}") from exc


def _load_artifact(art_dir: Path) -> ExploitArtifact:
    repo_path = art_dir / REPO_FILE
    data = _read_json(repo_path)
    repo = _repo_from_json(data, repo_path)
    overrides = data.get("kinds", {})
    doc_paths = set()
    docs = []
    for entry in data.get("docs", ()):
        url = _require(entry, "url", repo_path)
        if "text" in entry:
            text = entry["text"]
        else:
            rel = _require(entry, "path", repo_path)
            doc_paths.add(rel)
            text = (art_dir / rel).read_text(encoding="utf-8")
        docs.append(WebDocument(url=url, text=text))

    files = []
    for dirpath, dirnames, filenames in os.walk(art_dir):
        dirnames.sort()
        for fname in sorted(filenames):
            full = Path(dirpath) / fname
            rel = full.relative_to(art_dir).as_posix()
            if rel == REPO_FILE or rel in doc_paths:
                continue
            raw = full.read_bytes()
            kind = overrides.get(rel) or classify_kind(rel, raw)
            text = raw.decode("utf-8", errors="replace") if kind in TEXTUAL_KINDS else None
            try:
                files.append(ArtifactFile(path=rel, kind=kind, text=text))
            except CorpusError as exc:
                raise CorpusError(f"{full}: {exc}") from exc
    files.sort(key=lambda f: f.path)
    return ExploitArtifact(
        artifact_id=str(data.get("artifact_id", art_dir.name)),
        repo=repo,
        files=tuple(files),
        docs=tuple(docs),
    )


def load_record(cve_dir: Path) -> VulnerabilityRecord:
    meta_path = cve_dir / META_FILE
    meta = _read_json(meta_path)
    artifacts = []
    art_root = cve_dir / ARTIFACTS_DIR
    if art_root.is_dir():
        for art_dir in sorted(p for p in art_root.iterdir() if p.is_dir()):
            artifacts.append(_load_artifact(art_dir))
    try:
        published = date.fromisoformat(str(_require(meta, "published", meta_path))[:10])
        return VulnerabilityRecord(
            cve_id=_require(meta, "cve_id", meta_path),
            application=meta.get("application", ""),
            published=published,
            cvss=meta.get("cvss"),
            epss=meta.get("epss"),
            exploits=tuple(artifacts),
        )
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"{meta_path}: {exc}") from exc


def load_corpus(root_path) -> list[VulnerabilityRecord]:
    """Load and validate every CVE directory under ``root_path``, sorted by cve_id."""
    root = Path(root_path)
    if not root.is_dir():
        raise CorpusError(f"{root}: corpus root is not a directory")
    records = []
    seen: dict[str, Path] = {}
    for cve_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if not (cve_dir / META_FILE).exists():
            logger.debug("skipping %s: no %s", cve_dir, META_FILE)
            continue
        record = load_record(cve_dir)
        if record.cve_id in seen:
            raise CorpusError(f"duplicate cve_id {record.cve_id} in {seen[record.cve_id]} and {cve_dir}")
        seen[record.cve_id] = cve_dir
        records.append(record)
    records.sort(key=lambda r: r.cve_id)
    return records


def _repo_to_json(repo: RepoMeta) -> dict:
    return {
        "repo_id": repo.repo_id,
        "description_len": repo.description_len,
        "issue_count": repo.issue_count,
        "topics": list(repo.topic_labels),
        "size_bytes": repo.size_bytes,
        "stars": repo.stars,
        "forks": repo.forks,
        "created_at": format_timestamp(repo.created_at),
    }


def write_corpus(corpus: Iterable[VulnerabilityRecord], root_path) -> None:
    """Write records in the layout :func:`load_corpus` reads.

    Binary and media files have no retained content and are written as empty
    placeholders with an explicit kind override.
    """
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    for record in corpus:
        cve_dir = root / record.cve_id
        cve_dir.mkdir(exist_ok=True)
        meta = {
            "cve_id": record.cve_id,
            "application": record.application,
            "published": record.published.isoformat(),
            "cvss": record.cvss,
            "epss": record.epss,
        }
        (cve_dir / META_FILE).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        for art in record.exploits:
            art_dir = cve_dir / ARTIFACTS_DIR / art.artifact_id
            art_dir.mkdir(parents=True, exist_ok=True)
            repo = _repo_to_json(art.repo)
            repo["artifact_id"] = art.artifact_id
            repo["kinds"] = {f.path: f.kind for f in art.files}
            repo["docs"] = [{"url": d.url, "text": d.text} for d in art.docs]
            (art_dir / REPO_FILE).write_text(json.dumps(repo, indent=2) + "\n", encoding="utf-8")
            for f in art.files:
                target = art_dir / f.path
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(f.text.encode("utf-8") if f.text is not None else b"")


def _label_from_json(obj, where: str) -> GroundTruthLabel:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected a JSON object")
    unknown = set(obj) - {"artifact_id", "maturity_observed", "completion_minutes", "error_count"}
    if unknown:
        raise CorpusError(f"{where}: unknown fields {sorted(unknown)}")
    if "artifact_id" not in obj or "maturity_observed" not in obj:
        raise CorpusError(f"{where}: artifact_id and maturity_observed are required")
    try:
        return GroundTruthLabel(
            artifact_id=str(obj["artifact_id"]),
            maturity_observed=obj["maturity_observed"],
            completion_minutes=obj.get("completion_minutes"),
            error_count=obj.get("error_count"),
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def load_labels(path, corpus: Optional[Iterable[VulnerabilityRecord]] = None) -> list[GroundTruthLabel]:
    """Read a JSON Lines label file.

    When ``corpus`` is given, every label must reference an artifact in it.
    """
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{where}: {exc}") from exc
            labels.append(_label_from_json(obj, where))
    if corpus is not None:
        known = {a.artifact_id for r in corpus for a in r.exploits}
        missing = sorted({lb.artifact_id for lb in labels} - known)
        if missing:
            raise CorpusError(f"{path}: labels reference unknown artifacts {missing}")
    return labels


def write_labels(labels: Iterable[GroundTruthLabel], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lb in labels:
            obj = {"artifact_id": lb.artifact_id, "maturity_observed": lb.maturity_observed.value}
            if lb.completion_minutes is not None:
                obj["completion_minutes"] = lb.completion_minutes
            if lb.error_count is not None:
                obj["error_count"] = lb.error_count
            fh.write(json.dumps(obj) + "\n")
