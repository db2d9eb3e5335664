"""Small builders shared by the test modules."""

from datetime import date, datetime, timezone

from aeas.corpus import ArtifactFile, ExploitArtifact, RepoMeta, VulnerabilityRecord, WebDocument

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def repo(repo_id="o/r", **kw):
    kw.setdefault("created_at", T0)
    kw.setdefault("size_bytes", 4096)
    return RepoMeta(repo_id=repo_id, **kw)


def artifact(aid="a1", files=None, docs=(), **repo_kw):
    if files is None:
        files = {"exploit.py": "import requests\n"}
    out = []
    for path, text in files.items():
        if text is None:
            out.append(ArtifactFile(path, "binary"))
        else:
            kind = "readme" if path.lower().startswith("readme") else (
                "source" if path.endswith((".py", ".c", ".sh", ".rb", ".go", ".js")) else "doc")
            out.append(ArtifactFile(path, kind, text))
    return ExploitArtifact(aid, repo(f"o/{aid}", **repo_kw), tuple(out), tuple(WebDocument(u, t) for u, t in docs))


def record(cve="CVE-2024-0001", exploits=(), **kw):
    kw.setdefault("application", "Foo")
    kw.setdefault("published", date(2024, 1, 1))
    return VulnerabilityRecord(cve, exploits=tuple(exploits), **kw)
