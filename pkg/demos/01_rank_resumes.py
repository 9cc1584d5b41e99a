#!/usr/bin/env python3
"""Rank a synthetic resume pool against one job description.

Generates a small seeded corpus, fits the TF-IDF backend on it, prints the
ranked list, then plants a copy of the job text in the pool to show that a
perfect match lands at rank 1 with score 1.0.
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rankattack.corpus import generate_synthetic
from rankattack.embeddings import TfIdfBackend
from rankattack.ranking import rank
from rankattack.text import DocKind, Document


def show(ranked, limit: int = 10) -> None:
    for position, (doc_id, score) in enumerate(ranked.entries[:limit], start=1):
        print(f"  {position:>3}  {doc_id:<12} {score:.4f}")


def main() -> None:
    corpus = generate_synthetic(seed=11, n_resumes=12, n_jobs=2)
    job = corpus.jobs[0]
    backend = TfIdfBackend.fit(corpus.documents)

    print(f"job {job.id}: {job.text.splitlines()[0]}")
    print(f"pool of {len(corpus.resumes)} resumes, backend {backend.kind} "
          f"(dim {backend.dim})\n")

    ranked = rank(job, list(corpus.resumes), backend)
    print("top of the ranking:")
    show(ranked)

    # A resume that repeats the job verbatim cannot be beaten by cosine.
    plant = Document(id="plant", kind=DocKind.RESUME, text=job.text)
    ranked = rank(job, [*corpus.resumes, plant], backend)
    print("\nafter planting a copy of the job text as a resume:")
    show(ranked, limit=3)


if __name__ == "__main__":
    main()
