"""Embedding backends behind one interface.

Three implementations: a native TF-IDF vectorizer, a client for a remote
sentence-embedding HTTP service, and a seeded hashed-projection backend so
everything downstream is testable offline. All of them emit fixed-dimension
float64 vectors; cosine similarity is the only metric used on them.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
import requests

from .text import Document, Vocabulary, build_vocabulary, tokenize


@runtime_checkable
class EmbeddingBackend(Protocol):
    """What every backend provides; attacks depend only on this surface."""

    def embed(self, text: str) -> np.ndarray: ...

    def embed_many(self, texts: Sequence[str]) -> np.ndarray: ...

    def descriptor(self) -> BackendDescriptor: ...


class EmbeddingServiceError(RuntimeError):
    """Base class for remote-backend failures."""


class TransportError(EmbeddingServiceError):
    """Could not reach the service or the connection died; retriable."""

    retriable = True


class ProtocolError(EmbeddingServiceError):
    """The service answered, but not with a valid protocol response."""

    retriable = False


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """dot(u, v) / (|u||v|); 0.0 when either vector has zero norm.

    The zero rule makes degenerate documents "dissimilar to everything"
    instead of an error, so attack loops never crash on empty variants.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class BackendDescriptor:
    """Serializable identity of a backend: enough to rebuild it for a rerun."""

    kind: str  # "tfidf" | "remote" | "hashed"
    dim: int
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "config": dict(self.config)}


# --------------------------------------------------------------------------
# TF-IDF


@dataclass(frozen=True)
class TfIdfModel:
    vocab: Vocabulary
    idf: np.ndarray
    doc_count: int

    def __post_init__(self) -> None:
        if len(self.idf) != len(self.vocab):
            raise ValueError("idf vector must align with vocabulary")


def fit_tfidf(corpus: Sequence[Document], stopwords: set[str] | None = None) -> TfIdfModel:
    """Fit vocabulary and smoothed idf weights over a corpus.

    idf[w] = ln((1 + N) / (1 + df(w))) + 1, so every weight is positive and
    ubiquitous words still contribute.
    """
    if not corpus:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    vocab = build_vocabulary(corpus, stopwords=stopwords)
    n = len(corpus)
    df = np.zeros(len(vocab), dtype=np.float64)
    for doc in corpus:
        for w in set(tokenize(doc.text)):
            i = vocab.index.get(w)
            if i is not None:
                df[i] += 1
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    return TfIdfModel(vocab=vocab, idf=idf, doc_count=n)


def embed_tfidf(model: TfIdfModel, tokens: Sequence[str]) -> np.ndarray:
    """L2-normalized tf x idf vector; all-zero stays all-zero."""
    v = np.zeros(len(model.vocab), dtype=np.float64)
    for w, c in Counter(tokens).items():
        i = model.vocab.index.get(w)
        if i is not None:
            v[i] = c * model.idf[i]
    norm = np.linalg.norm(v)
    if norm > 0.0:
        v /= norm
    return v


def save_tfidf(model: TfIdfModel, path: str) -> None:
    payload = {
        "vocab": list(model.vocab.words),
        "idf": [float(x) for x in model.idf],
        "doc_count": model.doc_count,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_tfidf(path: str) -> TfIdfModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return TfIdfModel(
        vocab=Vocabulary.from_words(payload["vocab"]),
        idf=np.asarray(payload["idf"], dtype=np.float64),
        doc_count=int(payload["doc_count"]),
    )


# --------------------------------------------------------------------------
# Hashed projection


def _token_unit_vector(seed: int, dim: int, token: str) -> np.ndarray:
    # hashlib, not hash(): Python's string hash is salted per process.
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=str(seed).encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def embed_hashed(seed: int, dim: int, tokens: Sequence[str]) -> np.ndarray:
    """Sum of per-token pseudo-random unit vectors, L2-normalized.

    Each distinct token maps to a fixed direction in R^dim determined only
    by (seed, token), so the embedding is reproducible across processes.
    """
    if dim < 8:
        raise ValueError(f"dim must be >= 8, got {dim}")
    v = np.zeros(dim, dtype=np.float64)
    for token, count in Counter(tokens).items():
        v += count * _token_unit_vector(seed, dim, token)
    norm = np.linalg.norm(v)
    if norm > 0.0:
        v /= norm
    return v


# --------------------------------------------------------------------------
# Backends


class TfIdfBackend:
    """Embeds raw text through a fitted, frozen TF-IDF model."""

    kind = "tfidf"

    def __init__(self, model: TfIdfModel):
        self.model = model
        self.dim = len(model.vocab)

    @classmethod
    def fit(cls, corpus: Sequence[Document], stopwords: set[str] | None = None) -> "TfIdfBackend":
        return cls(fit_tfidf(corpus, stopwords=stopwords))

    def embed(self, text: str) -> np.ndarray:
        return embed_tfidf(self.model, tokenize(text))

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts]) if texts else np.zeros((0, self.dim))

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(kind=self.kind, dim=self.dim, config={"doc_count": self.model.doc_count})


class HashedBackend:
    """Deterministic stand-in for a sentence encoder; exercises attack logic offline."""

    kind = "hashed"

    def __init__(self, seed: int, dim: int = 256):
        if dim < 8:
            raise ValueError(f"dim must be >= 8, got {dim}")
        self.seed = seed
        self.dim = dim
        self._token_vecs: dict[str, np.ndarray] = {}

    def _vec(self, token: str) -> np.ndarray:
        v = self._token_vecs.get(token)
        if v is None:
            v = _token_unit_vector(self.seed, self.dim, token)
            self._token_vecs[token] = v
        return v

    def embed(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.float64)
        for token, count in Counter(tokenize(text)).items():
            v += count * self._vec(token)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            v /= norm
        return v

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts]) if texts else np.zeros((0, self.dim))

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(kind=self.kind, dim=self.dim, config={"seed": self.seed})


MAX_REMOTE_TEXT_BYTES = 100 * 1024
REMOTE_BATCH_SIZE = 32


class RemoteBackend:
    """Client for the embedding wire protocol (POST /embed, GET /health).

    Batches of at most `batch_size` texts per request; a call either yields
    one vector per input text, in order, or raises — no partial results.
    """

    kind = "remote"

    def __init__(self, endpoint: str, batch_size: int = REMOTE_BATCH_SIZE, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.timeout = timeout
        self._session = requests.Session()
        self._dim: int | None = None
        self._memo: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        if self._dim is None:
            self._dim = int(self.health()["dim"])
        return self._dim

    def health(self) -> dict:
        try:
            resp = self._session.get(f"{self.endpoint}/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"health check against {self.endpoint} failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"/health returned {resp.status_code}")
        body = resp.json()
        if "dim" not in body:
            raise ProtocolError("/health response missing 'dim'")
        return body

    def embed(self, text: str) -> np.ndarray:
        cached = self._memo.get(text)
        if cached is None:
            cached = self.embed_many([text])[0]
        return cached

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            raise ValueError("texts must be non-empty")
        for t in texts:
            if len(t.encode("utf-8")) > MAX_REMOTE_TEXT_BYTES:
                raise ValueError(f"text exceeds {MAX_REMOTE_TEXT_BYTES} bytes")
        missing = [t for t in dict.fromkeys(texts) if t not in self._memo]
        fetched: dict[str, np.ndarray] = {}
        for start in range(0, len(missing), self.batch_size):
            batch = missing[start : start + self.batch_size]
            for t, v in zip(batch, self._post_batch(batch)):
                fetched[t] = v
        # Commit only after every batch succeeded: the call is atomic.
        self._memo.update(fetched)
        return np.stack([self._memo[t] for t in texts])

    def _post_batch(self, batch: list[str]) -> np.ndarray:
        try:
            resp = self._session.post(
                f"{self.endpoint}/embed", json={"texts": batch}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"embed request to {self.endpoint} failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"/embed returned {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            dim = int(body["dim"])
            vectors = body["vectors"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed /embed response: {exc}") from exc
        if len(vectors) != len(batch):
            raise ProtocolError(f"asked for {len(batch)} vectors, got {len(vectors)}")
        out = np.asarray(vectors, dtype=np.float64)
        if out.ndim != 2 or out.shape[1] != dim:
            raise ProtocolError("vector dimensions inconsistent within batch")
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise ProtocolError(f"service dim changed from {self._dim} to {dim}")
        if not np.all(np.isfinite(out)):
            raise ProtocolError("service returned non-finite values")
        return out

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(kind=self.kind, dim=self.dim, config={"endpoint": self.endpoint})


def embed_remote(endpoint: str, texts: Sequence[str]) -> np.ndarray:
    """One-shot remote embedding of `texts`, batching handled internally."""
    return RemoteBackend(endpoint).embed_many(texts)


class CachingBackend:
    """LRU text -> vector cache around any backend.

    Keeps re-ranking cheap inside attack loops: pool documents stay resident
    while the stream of probe variants churns through the tail.
    """

    def __init__(self, inner, maxsize: int = 1024):
        self.inner = inner
        self.maxsize = maxsize
        self._cache: OrderedDict[str, np.ndarray] = OrderedDict()

    @property
    def kind(self) -> str:
        return self.inner.kind

    @property
    def dim(self) -> int:
        return self.inner.dim

    def embed(self, text: str) -> np.ndarray:
        v = self._cache.get(text)
        if v is not None:
            self._cache.move_to_end(text)
            return v
        v = self.inner.embed(text)
        self._cache[text] = v
        while len(self._cache) > self.maxsize:
            self._cache.popitem(last=False)
        return v

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        misses = [t for t in dict.fromkeys(texts) if t not in self._cache]
        fresh: dict[str, np.ndarray] = {}
        if misses:
            for t, v in zip(misses, self.inner.embed_many(misses)):
                fresh[t] = v
                self._cache[t] = v
            while len(self._cache) > self.maxsize:
                self._cache.popitem(last=False)
        vecs = []
        for t in texts:
            v = self._cache.get(t)
            if v is None:
                v = fresh[t]  # inserted this call but already evicted
            else:
                self._cache.move_to_end(t)
            vecs.append(v)
        return np.stack(vecs) if vecs else np.zeros((0, self.dim))

    def descriptor(self) -> BackendDescriptor:
        return self.inner.descriptor()
