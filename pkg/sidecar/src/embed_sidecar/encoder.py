"""Text encoders served by the sidecar.

The default is a hashed bag-of-tokens encoder: every token maps to a
fixed pseudo-random direction on the 512-sphere and a text embeds as the
L2-normalized multiset sum. It needs no downloaded weights, so the
service always comes up, even fully offline. When MODEL_NAME names a
sentence-transformers model that is available locally, that model is
served instead; if loading fails the service falls back to the hashed
encoder and /health reports what is actually running.
"""
from __future__ import annotations

import hashlib
import logging
from typing import Protocol, Sequence

import numpy as np

logger = logging.getLogger("embed_sidecar")

HASHED_NAME = "hashed-512"
_HASH_KEY = b"embed-sidecar-v1"  # distinct space from any client-side encoder


class Encoder(Protocol):
    name: str
    dim: int

    def encode(self, texts: Sequence[str]) -> list[list[float]]: ...


def _tokenize(text: str) -> list[str]:
    return "".join(c if c.isalnum() else " " for c in text.lower()).split()


class HashedEncoder:
    name = HASHED_NAME
    dim = 512

    def __init__(self) -> None:
        self._directions: dict[str, np.ndarray] = {}

    def _direction(self, token: str) -> np.ndarray:
        v = self._directions.get(token)
        if v is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=_HASH_KEY
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            v = rng.standard_normal(self.dim)
            v /= np.linalg.norm(v)
            self._directions[token] = v
        return v

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            v = np.zeros(self.dim, dtype=np.float64)
            for token in _tokenize(text):
                v += self._direction(token)
            norm = np.linalg.norm(v)
            if norm > 0.0:
                v /= norm
            out.append(v.tolist())
        return out


class SentenceTransformerEncoder:
    """Wraps a locally available sentence-transformers model."""

    def __init__(self, name: str, model) -> None:
        self.name = name
        self._model = model
        self.dim = int(model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        vectors = self._model.encode(list(texts), convert_to_numpy=True)
        return [row.tolist() for row in np.asarray(vectors, dtype=np.float64)]


def load_encoder(model_name: str = HASHED_NAME) -> Encoder:
    if model_name == HASHED_NAME:
        return HashedEncoder()
    try:
        from sentence_transformers import SentenceTransformer

        return SentenceTransformerEncoder(model_name, SentenceTransformer(model_name))
    except Exception as exc:
        logger.warning("cannot load %r (%s); serving %s instead",
                       model_name, exc, HASHED_NAME)
        return HashedEncoder()
