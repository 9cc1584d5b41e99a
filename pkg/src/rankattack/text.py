"""Text primitives shared by every other module.

Deterministic by construction: tokenization is a fixed rule (lowercase,
split on any non-alphanumeric character), vocabularies are frequency-ranked
with lexicographic tie-breaking, and nothing here touches an RNG.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

# Alphanumeric runs; \w minus underscore keeps unicode letters and digits.
_TOKEN_RE = re.compile(r"[^\W_]+")


class DocKind(Enum):
    RESUME = "resume"
    JOB = "job"


@dataclass(frozen=True)
class Document:
    """A text unit (resume or job description) with a corpus-unique id."""

    id: str
    kind: DocKind
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character.

    Empty fragments disappear; purely numeric tokens are kept (resumes
    contain years and version numbers).
    """
    return _TOKEN_RE.findall(text.lower())


def filter_stopwords(tokens: Sequence[str], stopwords: set[str]) -> list[str]:
    """Drop stopwords, preserving the relative order of survivors."""
    return [t for t in tokens if t not in stopwords]


def ngrams(tokens: Sequence[str], n: int) -> list[str]:
    """All contiguous n-token windows, in order, joined by single spaces."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


@dataclass(frozen=True)
class Vocabulary:
    """Ordered unique words plus the inverse word -> position map."""

    words: tuple[str, ...]
    index: dict[str, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocabulary":
        ordered = tuple(words)
        index = {w: i for i, w in enumerate(ordered)}
        if len(index) != len(ordered):
            raise ValueError("vocabulary words must be unique")
        return cls(words=ordered, index=index)


def build_vocabulary(
    docs: Sequence[Document],
    max_size: int | None = None,
    stopwords: set[str] | None = None,
) -> Vocabulary:
    """Frequency-ranked vocabulary over all documents.

    Words are ordered by descending total occurrence count (after
    tokenization and, when `stopwords` is given, stopword filtering),
    ties broken lexicographically ascending, then truncated to
    `max_size`. Raises if no token survives.
    """
    if not docs:
        raise ValueError("cannot build a vocabulary from zero documents")
    if max_size is not None and max_size < 1:
        raise ValueError(f"max_size must be positive, got {max_size}")
    counts: Counter[str] = Counter()
    for doc in docs:
        tokens = tokenize(doc.text)
        if stopwords:
            tokens = filter_stopwords(tokens, stopwords)
        counts.update(tokens)
    if not counts:
        raise ValueError("all documents tokenized to empty; no vocabulary")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if max_size is not None:
        ranked = ranked[:max_size]
    return Vocabulary.from_words(w for w, _ in ranked)


def one_hot(tokens: Sequence[str], vocab: Vocabulary) -> np.ndarray:
    """Binary presence vector over `vocab`; out-of-vocabulary tokens ignored."""
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    bits = np.zeros(len(vocab), dtype=np.uint8)
    for t in set(tokens):
        i = vocab.index.get(t)
        if i is not None:
            bits[i] = 1
    return bits


def default_stopwords() -> set[str]:
    """The bundled 179-word English stopword list."""
    raw = resources.files("rankattack.data").joinpath("stopwords.txt").read_text("utf-8")
    return _parse_stopwords(raw)


def load_stopwords(path: str) -> set[str]:
    """Read a stopword file: UTF-8, one lowercase word per line, `#` comments."""
    with open(path, encoding="utf-8") as fh:
        return _parse_stopwords(fh.read())


def _parse_stopwords(raw: str) -> set[str]:
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return words
