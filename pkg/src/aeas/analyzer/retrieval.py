"""Word-window chunking and a small inverted-index lexical retriever."""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

CHUNK_WORDS = 400
CHUNK_OVERLAP = 50

_TOKEN = re.compile(r"[a-z0-9_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Chunk:
    source: str
    doc_index: int
    chunk_index: int
    start_line: int
    text: str

    def render(self) -> str:
        return f"[{self.source} from line {self.start_line}]\n{self.text}"


def chunk_text(text: str, size: int = CHUNK_WORDS, overlap: int = CHUNK_OVERLAP) -> list[tuple[int, str]]:
    """Split into windows of ``size`` whitespace words overlapping by ``overlap``.

    Returns ``(start_line, chunk_text)`` pairs, 1-based lines.  Line breaks
    inside a window are preserved.
    """
    if size <= overlap:
        raise ValueError("chunk size must exceed overlap")
    words = [(m.start(), m.end()) for m in re.finditer(r"\S+", text)]
    if not words:
        return []
    chunks = []
    step = size - overlap
    start = 0
    while True:
        end = min(start + size, len(words))
        lo, hi = words[start][0], words[end - 1][1]
        chunks.append((text.count("\n", 0, lo) + 1, text[lo:hi]))
        if end == len(words):
            break
        start += step
    return chunks


Document = Union[str, tuple[str, str]]


def chunk_documents(documents: Iterable[Document], size: int = CHUNK_WORDS,
                    overlap: int = CHUNK_OVERLAP) -> list[Chunk]:
    """Documents are ``(source, text)`` pairs or bare strings."""
    chunks = []
    for d_idx, doc in enumerate(documents):
        source, text = (f"doc{d_idx}", doc) if isinstance(doc, str) else doc
        for c_idx, (line, body) in enumerate(chunk_text(text, size, overlap)):
            chunks.append(Chunk(source, d_idx, c_idx, line, body))
    return chunks


class LexicalIndex:
    """Term frequency weighted by ``1 + ln(N / df)`` per distinct query term."""

    def __init__(self, chunks: Sequence[Chunk]):
        self.chunks = list(chunks)
        self.postings: dict[str, dict[int, int]] = defaultdict(dict)
        for pos, chunk in enumerate(self.chunks):
            for term, tf in Counter(tokenize(chunk.text)).items():
                self.postings[term][pos] = tf

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return 1.0 + math.log(len(self.chunks) / df) if df else 0.0

    def scores(self, query: str) -> dict[int, float]:
        acc: dict[int, float] = defaultdict(float)
        for term in sorted(set(tokenize(query))):
            idf = self.idf(term)
            for pos, tf in self.postings.get(term, {}).items():
                acc[pos] += tf * idf
        return acc

    def search(self, query: str, k: int) -> list[Chunk]:
        if k <= 0:
            return []
        acc = self.scores(query)
        ranked = sorted(
            (pos for pos, s in acc.items() if s > 0),
            key=lambda pos: (-acc[pos], self.chunks[pos].doc_index, self.chunks[pos].chunk_index),
        )
        return [self.chunks[pos] for pos in ranked[:k]]


def index_and_retrieve(query: str, documents: Iterable[Document], k: int,
                       size: int = CHUNK_WORDS, overlap: int = CHUNK_OVERLAP) -> list[Chunk]:
    """Top-``k`` chunks with a positive score; ties by (doc order, chunk order)."""
    if k <= 0:
        return []
    return LexicalIndex(chunk_documents(documents, size, overlap)).search(query, k)
