"""White-box keyword-insertion rank attack.

Three stages. Deletion scoring finds the n-grams whose removal moves the
job description's embedding the most (low cosine to the original = high
influence). Insertion scoring re-sorts those candidates by how much each
one, appended alone, raises a specific resume's similarity to the job.
The attack loop then inserts the top-b candidates for each budget b and
measures the rank movement inside an otherwise untouched pool.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .embeddings import CachingBackend, cosine_similarity
from .ranking import rank, rank_of
from .text import Document, default_stopwords, filter_stopwords, ngrams, tokenize

GRAM_NAMES = {1: "unigram", 2: "bigram", 3: "trigram"}
DEFAULT_SHORTLIST = 50
DEFAULT_BUDGETS = (1, 2, 5, 10, 20, 50)


@dataclass(frozen=True)
class KeywordScore:
    phrase: str
    score: float
    n: int

    def __post_init__(self) -> None:
        if not self.phrase:
            raise ValueError("phrase must be non-empty")
        if len(self.phrase.split(" ")) != self.n:
            raise ValueError(f"phrase {self.phrase!r} is not a {self.n}-gram")


@dataclass(frozen=True)
class AttackConfig:
    gram: int = 1  # 1 | 2 | 3
    shortlist: int = DEFAULT_SHORTLIST
    budgets: tuple[int, ...] = DEFAULT_BUDGETS

    def __post_init__(self) -> None:
        if self.gram not in GRAM_NAMES:
            raise ValueError(f"gram must be 1, 2 or 3, got {self.gram}")
        if self.shortlist < 1:
            raise ValueError("shortlist must be positive")
        if not self.budgets or any(b < 1 for b in self.budgets):
            raise ValueError("budgets must be positive")
        if list(self.budgets) != sorted(self.budgets):
            raise ValueError("budgets must be sorted ascending")
        if max(self.budgets) > self.shortlist:
            raise ValueError("max budget cannot exceed the shortlist size")


@dataclass(frozen=True)
class RankReport:
    job_id: str
    resume_id: str
    gram: int
    budget: int
    rank_before: int
    rank_after: int
    rank_change: int  # rank_before - rank_after; positive = moved toward 1
    inserted: tuple[str, ...]


def score_keywords_by_deletion(
    job: Document,
    gram: int,
    backend,
    stopwords: set[str] | None = None,
) -> list[KeywordScore]:
    """Score each distinct n-gram of the job by deleting all its occurrences.

    The job text is stopword-filtered first; the baseline embedding is the
    filtered text itself. Output is sorted ascending by similarity of the
    deletion variant to the baseline — most influential first — with ties
    going to the earlier first occurrence.
    """
    if gram < 1:
        raise ValueError(f"gram must be >= 1, got {gram}")
    stop = default_stopwords() if stopwords is None else stopwords
    tokens = filter_stopwords(tokenize(job.text), stop)
    if not tokens:
        raise ValueError(f"job {job.id!r} is empty after stopword filtering")
    if len(tokens) < gram:
        raise ValueError(
            f"job {job.id!r} has {len(tokens)} tokens after filtering; "
            f"cannot form {gram}-grams"
        )
    grams = ngrams(tokens, gram)
    first_seen: dict[str, int] = {}
    for i, g in enumerate(grams):
        first_seen.setdefault(g, i)
    base_vec = backend.embed(" ".join(tokens))
    scored = []
    for g, first in first_seen.items():
        variant = _delete_all(tokens, g.split(" "))
        sim = cosine_similarity(base_vec, backend.embed(" ".join(variant)))
        scored.append((sim, first, g))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [KeywordScore(phrase=g, score=s, n=gram) for s, _, g in scored]


def _delete_all(tokens: Sequence[str], window: Sequence[str]) -> list[str]:
    # Remove every occurrence, scanning left to right; overlapping matches
    # resolve greedily (after a removal the scan resumes past it).
    n = len(window)
    out: list[str] = []
    i = 0
    while i <= len(tokens) - n:
        if list(tokens[i : i + n]) == list(window):
            i += n
        else:
            out.append(tokens[i])
            i += 1
    out.extend(tokens[i:])
    return out


def rescore_keywords_for_resume(
    job: Document,
    resume: Document,
    shortlist: Sequence[KeywordScore],
    backend,
) -> list[KeywordScore]:
    """Re-sort candidate phrases by the similarity each single insertion buys.

    Every candidate is appended (alone) to the original resume text and the
    adversarial resume is scored against the job. Output is descending by
    that score; ties keep the shortlist order. No short-circuit for phrases
    already present in the resume: the measured similarity is what counts.
    """
    if not shortlist:
        raise ValueError("shortlist must be non-empty")
    job_vec = backend.embed(job.text)
    rescored = []
    for ks in shortlist:
        adv = insert_phrases(resume.text, [ks.phrase])
        sim = cosine_similarity(backend.embed(adv), job_vec)
        rescored.append(replace(ks, score=sim))
    rescored.sort(key=lambda ks: -ks.score)  # stable: ties keep input order
    return rescored


def insert_phrases(resume_text: str, phrases: Sequence[str]) -> str:
    """Append phrases at the end of the resume, space-separated, in order."""
    suffix = " ".join(phrases)
    if not suffix:
        return resume_text
    return f"{resume_text} {suffix}" if resume_text else suffix


@dataclass
class AttackRun:
    reports: list[RankReport]
    skipped: list[tuple[str, str, int]] = field(default_factory=list)  # (job, resume, budget)


def run_whitebox_attack(
    jobs: Sequence[Document],
    resumes: Sequence[Document],
    config: AttackConfig,
    backend,
    stopwords: set[str] | None = None,
) -> AttackRun:
    """Attack every (job, resume) pair at every budget.

    Each experiment replaces one resume with its adversarial version,
    re-ranks the pool, and restores it; attacks never compound. A budget
    larger than the candidate list for a given job is skipped and recorded.
    """
    if len(resumes) < 2:
        raise ValueError("need at least 2 resumes for rank changes to mean anything")
    cached = CachingBackend(backend, maxsize=4 * len(resumes) + 256)
    run = AttackRun(reports=[])
    for job in jobs:
        keywords = score_keywords_by_deletion(job, config.gram, cached, stopwords)
        shortlist = keywords[: config.shortlist]
        baseline = rank(job, resumes, cached)
        for resume in resumes:
            rank_before = rank_of(baseline, resume.id)
            candidates = rescore_keywords_for_resume(job, resume, shortlist, cached)
            for budget in config.budgets:
                if budget > len(candidates):
                    run.skipped.append((job.id, resume.id, budget))
                    continue
                chosen = tuple(ks.phrase for ks in candidates[:budget])
                adv = Document(id=resume.id, kind=resume.kind, text=insert_phrases(resume.text, chosen))
                pool = [adv if d.id == resume.id else d for d in resumes]
                rank_after = rank_of(rank(job, pool, cached), resume.id)
                run.reports.append(
                    RankReport(
                        job_id=job.id,
                        resume_id=resume.id,
                        gram=config.gram,
                        budget=budget,
                        rank_before=rank_before,
                        rank_after=rank_after,
                        rank_change=rank_before - rank_after,
                        inserted=chosen,
                    )
                )
    return run


def aggregate_reports(reports: Sequence[RankReport], bin_width: int = 2) -> dict:
    """Group means by (gram, budget) plus a histogram of per-resume means."""
    if not reports:
        raise ValueError("no reports to aggregate")
    if bin_width < 1:
        raise ValueError("bin_width must be positive")
    groups: dict[tuple[int, int], list[int]] = {}
    per_resume: dict[str, list[int]] = {}
    for r in reports:
        groups.setdefault((r.gram, r.budget), []).append(r.rank_change)
        per_resume.setdefault(r.resume_id, []).append(r.rank_change)
    group_rows = [
        {
            "gram": GRAM_NAMES[gram],
            "budget": budget,
            "mean_rank_change": sum(changes) / len(changes),
            "count": len(changes),
        }
        for (gram, budget), changes in sorted(groups.items())
    ]
    means = sorted(sum(v) / len(v) for v in per_resume.values())
    lo_edge = math.floor(means[0] / bin_width) * bin_width
    hi_edge = math.floor(means[-1] / bin_width) * bin_width + bin_width
    bins = []
    edge = lo_edge
    while edge < hi_edge:
        count = sum(1 for m in means if edge <= m < edge + bin_width)
        bins.append({"lo": edge, "hi": edge + bin_width, "count": count})
        edge += bin_width
    return {
        "groups": group_rows,
        "histogram": {"bin_width": bin_width, "bins": bins, "resumes": len(per_resume)},
    }


def write_reports_csv(reports: Sequence[RankReport], path: str) -> None:
    rows = sorted(reports, key=lambda r: (r.job_id, r.resume_id, r.gram, r.budget))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["job_id", "resume_id", "gram", "budget", "rank_before", "rank_after", "rank_change", "inserted"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.job_id,
                    r.resume_id,
                    GRAM_NAMES[r.gram],
                    r.budget,
                    r.rank_before,
                    r.rank_after,
                    r.rank_change,
                    "|".join(r.inserted),
                ]
            )


def write_summary_json(summary: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
