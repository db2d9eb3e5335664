"""Repository elimination/prioritization and file/content filtering."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from html.parser import HTMLParser
from typing import Iterable, Optional, Sequence

from .corpus import BINARY, CONFIG, MEDIA, TEXTUAL_KINDS, RepoMeta, classify_kind

DEFAULT_RELEVANT_TOPICS = frozenset({
    "cve", "exploit", "poc", "proof-of-concept", "vulnerability", "security",
    "pentest", "penetration-testing", "rce", "red-team", "infosec", "cybersecurity",
    "exploitation", "lpe", "privilege-escalation", "bug-bounty", "hacking",
})


@dataclass(frozen=True)
class RepoSignals:
    d: float
    i: float
    t: float

    def __post_init__(self):
        for name in ("d", "i", "t"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"signal {name}={value} outside [0, 1]")


@dataclass(frozen=True)
class FilterConfig:
    # (description, issues, topics).  Normalized weights keep the score in
    # [0, 1]; unnormalized ones are accepted so weights and threshold can be
    # rescaled together.
    confidence_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    confidence_threshold: float = 0.5
    quality_lambda: float = 1 / 365  # per day
    max_description_len: int = 2000
    max_issue_count: int = 100
    min_size_bytes: int = 1024
    max_size_bytes: int = 50 * 1024 * 1024
    top_n: Optional[int] = None
    keep_extensions: frozenset = frozenset()
    drop_extensions: frozenset = frozenset()
    relevant_topics: frozenset = field(default=DEFAULT_RELEVANT_TOPICS)

    def __post_init__(self):
        w = tuple(float(x) for x in self.confidence_weights)
        if len(w) != 3 or any(x < 0 or math.isnan(x) for x in w) or sum(w) <= 0:
            raise ValueError(f"confidence_weights must be three non-negative reals, got {self.confidence_weights}")
        object.__setattr__(self, "confidence_weights", w)
        if self.quality_lambda <= 0:
            raise ValueError("quality_lambda must be > 0")
        if self.max_description_len <= 0 or self.max_issue_count <= 0:
            raise ValueError("max_description_len and max_issue_count must be > 0")
        for name in ("keep_extensions", "drop_extensions", "relevant_topics"):
            object.__setattr__(self, name, frozenset(x.lower() for x in getattr(self, name)))

    def normalized(self) -> "FilterConfig":
        """Same decisions, weights rescaled to sum to one."""
        total = sum(self.confidence_weights)
        return replace(
            self,
            confidence_weights=tuple(w / total for w in self.confidence_weights),
            confidence_threshold=self.confidence_threshold / total,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "FilterConfig":
        kwargs = dict(data)
        for name in ("confidence_weights",):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        for name in ("keep_extensions", "drop_extensions", "relevant_topics"):
            if name in kwargs:
                kwargs[name] = frozenset(kwargs[name])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "confidence_weights": list(self.confidence_weights),
            "confidence_threshold": self.confidence_threshold,
            "quality_lambda": self.quality_lambda,
            "max_description_len": self.max_description_len,
            "max_issue_count": self.max_issue_count,
            "min_size_bytes": self.min_size_bytes,
            "max_size_bytes": self.max_size_bytes,
            "top_n": self.top_n,
            "keep_extensions": sorted(self.keep_extensions),
            "drop_extensions": sorted(self.drop_extensions),
            "relevant_topics": sorted(self.relevant_topics),
        }


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def repo_signals(meta: RepoMeta, relevant_topics: Optional[Iterable[str]] = None,
                 cfg: FilterConfig = FilterConfig()) -> RepoSignals:
    """Goodness indicators: 1 means no penalty."""
    topics = cfg.relevant_topics if relevant_topics is None else frozenset(t.lower() for t in relevant_topics)
    d = _clamp01(1.0 - meta.description_len / cfg.max_description_len)
    i = _clamp01(1.0 - meta.issue_count / cfg.max_issue_count)
    labels = [t.lower() for t in meta.topic_labels]
    t = 1.0 if not labels else sum(1 for lb in labels if lb in topics) / len(labels)
    return RepoSignals(d, i, t)


def confidence_score(s: RepoSignals, cfg: FilterConfig = FilterConfig()) -> float:
    w1, w2, w3 = cfg.confidence_weights
    return w1 * s.d + w2 * s.i + w3 * s.t


def quality_score(meta: RepoMeta, now: datetime, cfg: FilterConfig = FilterConfig()) -> float:
    """stars * lambda * age_days / max(forks, 1)."""
    age = now - meta.created_at
    if age.total_seconds() < 0:
        raise ValueError(f"repo {meta.repo_id!r} created after the reference time {now.isoformat()}")
    age_days = age.total_seconds() / 86400.0
    return meta.stars * cfg.quality_lambda * age_days / max(meta.forks, 1)


def within_size_bounds(meta: RepoMeta, cfg: FilterConfig = FilterConfig()) -> bool:
    return cfg.min_size_bytes <= meta.size_bytes <= cfg.max_size_bytes


def eliminate(repos: Sequence[RepoMeta], cfg: FilterConfig = FilterConfig(),
              relevant_topics: Optional[Iterable[str]] = None) -> list[RepoMeta]:
    """Keep repositories whose confidence score reaches the threshold, input order preserved."""
    topics = None if relevant_topics is None else frozenset(relevant_topics)
    return [
        r for r in repos
        if confidence_score(repo_signals(r, topics, cfg), cfg) >= cfg.confidence_threshold
    ]


def prioritize(repos: Sequence[RepoMeta], now: datetime, cfg: FilterConfig = FilterConfig(),
               top_n: Optional[int] = None, relevant_topics: Optional[Iterable[str]] = None) -> list[RepoMeta]:
    """Eliminate, then order by quality (desc), stars (desc), repo_id."""
    kept = eliminate(repos, cfg, relevant_topics)
    kept.sort(key=lambda r: (-quality_score(r, now, cfg), -r.stars, r.repo_id))
    if top_n is not None:
        kept = kept[:top_n]
    return kept


def file_filter(path: str, kind: Optional[str] = None, cfg: FilterConfig = FilterConfig()) -> bool:
    """True to keep the file.  Source code and README/docs stay; binaries, media, config go."""
    ext = "." + path.rsplit(".", 1)[-1].lower() if "." in path.rsplit("/", 1)[-1] else ""
    if ext and ext in cfg.drop_extensions:
        return False
    if ext and ext in cfg.keep_extensions:
        return True
    kind = kind or classify_kind(path)
    if kind in (BINARY, MEDIA, CONFIG):
        return False
    return kind in TEXTUAL_KINDS


# --- main-content extraction -------------------------------------------------

_TAG_RE = re.compile(r"<\s*/?\s*[a-zA-Z!][^>]*>")
_HTML_HINT = re.compile(
    r"<\s*(!doctype|html|head|body|div|p|span|a|article|main|section|pre|code|h[1-6]|ul|ol|li|"
    r"table|br|script|style|nav|aside|header|footer)\b[^>]*>",
    re.I,
)
_VOID = frozenset({"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta",
                   "param", "source", "track", "wbr"})
_DROP_TAGS = frozenset({"script", "style", "noscript", "nav", "aside", "footer", "form", "iframe",
                        "svg", "button", "select", "template", "head", "object", "canvas"})
_BLOCK_TAGS = frozenset({"p", "div", "section", "article", "main", "pre", "blockquote", "ul", "ol", "li",
                         "table", "tr", "h1", "h2", "h3", "h4", "h5", "h6", "header", "dl", "dt", "dd",
                         "figure", "figcaption", "body", "html", "br", "hr", "td", "th"})
_HEADINGS = frozenset({"h1", "h2", "h3", "h4", "h5", "h6"})
_UNLIKELY = re.compile(
    r"sidebar|side-bar|advert|\bads?\b|ad-|banner|sponsor|promo|social|share|comment|"
    r"footer|menu|navbar|breadcrumb|related|popup|cookie|newsletter|subscribe|widget|masthead",
    re.I,
)
_LIKELY = re.compile(r"article|content|entry|main|post|story|blog|text|body|writeup", re.I)


class _Node:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag, attrs=None, parent=None):
        self.tag = tag
        self.attrs = attrs or {}
        self.children: list = []
        self.parent = parent

    def class_id(self) -> str:
        return f"{self.attrs.get('class', '')} {self.attrs.get('id', '')}".strip()

    def iter(self):
        yield self
        for child in self.children:
            if isinstance(child, _Node):
                yield from child.iter()


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = _Node("#root")
        self.cur = self.root

    def handle_starttag(self, tag, attrs):
        node = _Node(tag, {k: (v or "") for k, v in attrs}, self.cur)
        self.cur.children.append(node)
        if tag not in _VOID:
            self.cur = node

    def handle_startendtag(self, tag, attrs):
        self.cur.children.append(_Node(tag, {k: (v or "") for k, v in attrs}, self.cur))

    def handle_endtag(self, tag):
        node = self.cur
        while node is not self.root and node.tag != tag:
            node = node.parent
        if node is not self.root:
            self.cur = node.parent

    def handle_data(self, data):
        self.cur.children.append(data)


def _prune(node: _Node) -> None:
    kept = []
    for child in node.children:
        if isinstance(child, _Node):
            if child.tag in _DROP_TAGS:
                continue
            ci = child.class_id()
            if (ci and _UNLIKELY.search(ci) and not _LIKELY.search(ci)
                    and child.tag not in ("body", "article", "main", "pre", "code")):
                continue
            _prune(child)
        kept.append(child)
    node.children = kept


def _raw_text(node: _Node) -> str:
    parts = []
    for child in node.children:
        parts.append(_raw_text(child) if isinstance(child, _Node) else child)
    return "".join(parts)


def _link_text_len(node: _Node) -> int:
    return sum(len(_raw_text(n)) for n in node.iter() if n.tag == "a")


def _pick_candidate(root: _Node) -> _Node:
    explicit = [n for n in root.iter() if n.tag in ("article", "main")]
    if explicit:
        return max(explicit, key=lambda n: len(_raw_text(n).strip()))
    scores: dict[int, float] = {}
    nodes: dict[int, _Node] = {}
    for node in root.iter():
        if node.tag not in ("p", "pre", "td", "li", "blockquote"):
            continue
        text = " ".join(_raw_text(node).split())
        if len(text) < 25 and node.tag != "pre":
            continue
        score = 1 + text.count(",") + min(len(text) / 100, 3)
        if node.tag == "pre":
            score += 3
        for level, anc in enumerate((node.parent, node.parent.parent if node.parent else None)):
            if anc is None or anc is root:
                break
            if id(anc) not in scores:
                ci = anc.class_id()
                base = 25.0 if ci and _LIKELY.search(ci) else 0.0
                nodes[id(anc)] = anc
                scores[id(anc)] = base
            scores[id(anc)] += score / (1 + level)
    if not scores:
        return root
    best_id = max(scores, key=lambda k: (
        scores[k] * (1 - _link_text_len(nodes[k]) / max(1, len(_raw_text(nodes[k])))),
        -list(scores).index(k),
    ))
    return nodes[best_id]


def _render(node: _Node, out: list, code_blocks: list) -> None:
    for child in node.children:
        if isinstance(child, str):
            out.append(re.sub(r"\s+", " ", child))
            continue
        if child.tag == "pre":
            # placeholder keeps the block out of whitespace normalization
            code_blocks.append(_raw_text(child).strip("\n"))
            out.append(f"\n\n\x00{len(code_blocks) - 1}\x00\n\n")
            continue
        block = child.tag in _BLOCK_TAGS
        sep = "\n\n" if child.tag in _HEADINGS or child.tag == "p" else "\n"
        if block:
            out.append(sep)
        _render(child, out, code_blocks)
        if block:
            out.append(sep)


def _normalize_blocks(text: str) -> str:
    result, blank = [], False
    for line in text.split("\n"):
        line = line.strip()
        if not line:
            blank = bool(result)
            continue
        if blank:
            result.append("")
            blank = False
        result.append(line)
    return "\n".join(result)


def _strip_tags(html: str) -> str:
    text = re.sub(r"(?is)<(script|style)[^>]*>.*?</\1>", " ", html)
    text = _TAG_RE.sub(" ", text)
    return " ".join(text.split())


def looks_like_html(text: str) -> bool:
    return bool(_HTML_HINT.search(text))


def extract_main_content(html: str) -> str:
    """Main article text with boilerplate removed; code blocks kept verbatim.

    Input without markup is returned unchanged.
    """
    if not looks_like_html(html):
        return html
    try:
        builder = _TreeBuilder()
        builder.feed(html)
        builder.close()
        _prune(builder.root)
        candidate = _pick_candidate(builder.root)
        wrapper = _Node("#wrap")
        wrapper.children = [candidate]
        out: list[str] = []
        code_blocks: list[str] = []
        _render(wrapper, out, code_blocks)
        text = _normalize_blocks("".join(out))
        text = re.sub("\x00(\\d+)\x00", lambda m: code_blocks[int(m.group(1))], text)
    except Exception:
        return _strip_tags(html)
    return text if text.strip() else _strip_tags(html)
