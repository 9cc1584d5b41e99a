"""Similarity ranking: embed everything, score against the query, sort.

Rank 1 is the best match. Ties break by doc_id ascending so repeated runs
and cross-implementation comparisons always agree.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .text import Document


@dataclass(frozen=True)
class RankedList:
    query_id: str
    entries: tuple[tuple[str, float], ...]  # (doc_id, score), best first

    def __len__(self) -> int:
        return len(self.entries)


def rank(query: Document, pool: Sequence[Document], backend) -> RankedList:
    """Score every pool document against `query` by cosine, sort descending."""
    if not pool:
        raise ValueError("pool must be non-empty")
    ids = [d.id for d in pool]
    if len(set(ids)) != len(ids):
        raise ValueError("pool doc_ids must be unique")
    qv = backend.embed(query.text)
    vecs = backend.embed_many([d.text for d in pool])
    scores = _cosine_rows(vecs, qv)
    order = sorted(range(len(pool)), key=lambda i: (-scores[i], ids[i]))
    return RankedList(
        query_id=query.id,
        entries=tuple((ids[i], float(scores[i])) for i in order),
    )


def _cosine_rows(matrix: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Same semantics as cosine_similarity per row, vectorized.
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return np.zeros(matrix.shape[0])
    norms = np.linalg.norm(matrix, axis=1)
    out = np.zeros(matrix.shape[0])
    nonzero = norms > 0.0
    out[nonzero] = (matrix[nonzero] @ v) / (norms[nonzero] * nv)
    return out


def rank_of(ranked: RankedList, doc_id: str) -> int:
    """1-based position of `doc_id`; KeyError if absent."""
    for pos, (did, _) in enumerate(ranked.entries, start=1):
        if did == doc_id:
            return pos
    raise KeyError(f"doc_id {doc_id!r} not in ranked list")


def score_of(ranked: RankedList, doc_id: str) -> float:
    for did, score in ranked.entries:
        if did == doc_id:
            return score
    raise KeyError(f"doc_id {doc_id!r} not in ranked list")


def write_ranked_csv(ranked: RankedList, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "doc_id", "score"])
        for pos, (doc_id, score) in enumerate(ranked.entries, start=1):
            writer.writerow([pos, doc_id, repr(score)])


def write_ranked_json(ranked: RankedList, path: str) -> None:
    payload = {
        "query_id": ranked.query_id,
        "entries": [
            {"rank": pos, "doc_id": doc_id, "score": score}
            for pos, (doc_id, score) in enumerate(ranked.entries, start=1)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
