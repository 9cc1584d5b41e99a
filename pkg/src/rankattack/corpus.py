"""Corpus ingestion, synthetic corpus generation, and dataset statistics.

The synthetic generator replaces scraped hiring data with seeded fake
resumes and job postings. Documents are line-structured (header, summary,
skills, experience, education) so half-split augmentation produces
plausible hybrids, and jobs carry enough distinct content words that
keyword budgets up to 50 are always satisfiable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .text import DocKind, Document, build_vocabulary, tokenize


class CorpusError(RuntimeError):
    """A corpus directory could not be loaded."""


@dataclass(frozen=True)
class Corpus:
    resumes: tuple[Document, ...]
    jobs: tuple[Document, ...]
    source: str

    @property
    def documents(self) -> tuple[Document, ...]:
        return self.resumes + self.jobs

    def job(self, job_id: str) -> Document:
        for d in self.jobs:
            if d.id == job_id:
                return d
        raise KeyError(f"no job with id {job_id!r}")


def load_corpus(root: str | Path) -> Corpus:
    """Read `root`/resumes/*.txt and `root`/jobs/*.txt in sorted-name order."""
    root = Path(root)
    docs: dict[DocKind, list[Document]] = {DocKind.RESUME: [], DocKind.JOB: []}
    for sub, kind in (("resumes", DocKind.RESUME), ("jobs", DocKind.JOB)):
        d = root / sub
        if not d.is_dir():
            raise CorpusError(f"missing required subdirectory: {d}")
        paths = sorted(d.glob("*.txt"))
        if not paths:
            raise CorpusError(f"no .txt files in {d}")
        for p in paths:
            try:
                text = p.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as exc:
                raise CorpusError(f"cannot read {p}: {exc}") from exc
            docs[kind].append(Document(id=p.stem, kind=kind, text=text))
    ids = [d.id for d in docs[DocKind.RESUME] + docs[DocKind.JOB]]
    dupes = {i for i in ids if ids.count(i) > 1}
    if dupes:
        raise CorpusError(f"duplicate document ids across {root}: {sorted(dupes)}")
    return Corpus(
        resumes=tuple(docs[DocKind.RESUME]),
        jobs=tuple(docs[DocKind.JOB]),
        source=str(root),
    )


def write_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    out = Path(out_dir)
    for sub, docs in (("resumes", corpus.resumes), ("jobs", corpus.jobs)):
        d = out / sub
        d.mkdir(parents=True, exist_ok=True)
        for doc in docs:
            (d / f"{doc.id}.txt").write_text(doc.text, encoding="utf-8")


# --------------------------------------------------------------------------
# Synthetic generation

_BASE_SKILLS = (
    "python java javascript typescript rust golang scala kotlin swift ruby php perl "
    "haskell clojure erlang elixir sql postgres mysql mongodb redis kafka spark hadoop "
    "airflow docker kubernetes terraform ansible jenkins git linux bash aws azure gcp "
    "react angular vue django flask fastapi spring rails laravel pytorch tensorflow "
    "keras sklearn numpy pandas matlab tableau excel powerbi grafana prometheus "
    "elasticsearch graphql rest grpc microservices devops mlops nlp"
).split()

# Rotating filler so each job has many distinct content words while no single
# filler word becomes globally frequent enough to crowd skills out of the
# most-frequent-word vocabularies.
_JOB_FILLER = (
    "collaborate stakeholders roadmap architecture scalable distributed pipelines "
    "automation deployment monitoring reliability latency throughput optimization "
    "frameworks agile scrum sprints mentoring leadership communication documentation "
    "testing debugging profiling security compliance encryption authentication "
    "databases caching queues streaming batch analytics dashboards visualization "
    "modeling algorithms statistics regression classification clustering inference "
    "evaluation benchmarks research prototyping reviews standards quality refactoring "
    "migration integration apis platforms infrastructure provisioning orchestration "
    "containers clusters networking storage backup recovery incident troubleshooting "
    "performance capacity planning estimation delivery ownership innovation vendors "
    "budgets audits forecasting observability instrumentation telemetry governance"
).split()

_FIRST_NAMES = (
    "alice bruno carla dmitri elena farid grace hiro ines jonas katya liam mei noor "
    "oscar priya quentin rosa samir tara"
).split()

_LAST_NAMES = (
    "almeida baker cohen duarte evans fischer garcia haddad ivanov jensen kim lindgren "
    "moreau novak okafor petrov quirke rossi sato tanaka"
).split()

_COMPANIES = (
    "acmesoft brightlake cobaltworks datamill eastgate fernbyte glowstack harborlogic "
    "ironvale junoapps"
).split()

_SENIORITY = ("junior", "midlevel", "senior", "staff", "principal")
_DEGREES = ("bachelor", "master", "doctorate")


def _skill_pool(size: int) -> list[str]:
    if size < 20:
        raise ValueError(f"skill_pool_size must be >= 20, got {size}")
    pool = list(_BASE_SKILLS)
    prefixes = ["data", "cloud", "hyper", "quantum", "auto", "meta", "micro", "neuro", "flux", "turbo"]
    suffixes = ["flow", "forge", "base", "script", "graph", "stack", "works", "gen", "lab", "core"]
    k = 0
    while len(pool) < size:
        for p in prefixes:
            for s in suffixes:
                word = f"{p}{s}{k if k else ''}"
                if word not in pool:
                    pool.append(word)
                if len(pool) >= size:
                    return pool[:size]
        k += 1
    return pool[:size]


def generate_synthetic(
    seed: int,
    n_resumes: int = 100,
    n_jobs: int = 50,
    skill_pool_size: int = 300,
    overlap: float = 0.3,
    skill_quota: Mapping[str, float] | None = None,
) -> Corpus:
    """Seeded fake hiring corpus.

    `overlap` is the probability that a resume lists any given skill that
    appears in some job, so it controls the expected fraction of job skills
    already present per resume (1.0 saturates, 0.0 leaves maximum attack
    headroom). `skill_quota` maps skill -> exact fraction of resumes that
    must contain it (everyone else has it scrubbed); quota skills are
    mentioned three times in containing resumes so they stay visible in
    frequency-ranked vocabularies.
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must be in [0, 1], got {overlap}")
    if n_resumes < 1 or n_jobs < 1:
        raise ValueError("need at least one resume and one job")
    rnd = random.Random(seed)
    pool = _skill_pool(skill_pool_size)
    quota = dict(skill_quota or {})
    for word, frac in quota.items():
        if word not in pool:
            raise ValueError(f"quota skill {word!r} not in skill pool")
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"quota fraction for {word!r} must be in [0, 1]")

    job_skills = [sorted(rnd.sample(pool, rnd.randint(28, 40))) for _ in range(n_jobs)]
    job_union = sorted(set().union(*job_skills)) if job_skills else []
    off_job = [s for s in pool if s not in set(job_union)]

    resume_skills: list[set[str]] = []
    for _ in range(n_resumes):
        skills = {s for s in job_union if rnd.random() < overlap}
        if off_job:
            skills.update(rnd.sample(off_job, min(len(off_job), rnd.randint(3, 8))))
        resume_skills.append(skills)
    for word, frac in quota.items():
        holders = set(rnd.sample(range(n_resumes), round(frac * n_resumes)))
        for i, skills in enumerate(resume_skills):
            if i in holders:
                skills.add(word)
            else:
                skills.discard(word)

    resumes = []
    for i, skills in enumerate(resume_skills):
        rid = f"r{i:03d}"
        ordered = sorted(skills)
        first = rnd.choice(_FIRST_NAMES)
        last = rnd.choice(_LAST_NAMES)
        seniority = rnd.choice(_SENIORITY)
        years = rnd.randint(1, 18)
        company = rnd.choice(_COMPANIES)
        degree = rnd.choice(_DEGREES)
        grad_year = rnd.randint(1998, 2024)
        mentions = rnd.sample(ordered, min(2, len(ordered))) if ordered else []
        lines = [
            f"{first} {last}",
            f"summary {seniority} engineer with {years} years of experience shipping production software",
            "skills " + " ".join(ordered),
            f"experience built and maintained {' and '.join(mentions) if mentions else 'internal'} services at {company}",
        ]
        for word in sorted(quota):
            if word in skills:
                lines.append(f"delivered {word} projects end to end and automated {word} release workflows")
        lines.append(f"education {degree} of science in computer science {grad_year}")
        resumes.append(Document(id=rid, kind=DocKind.RESUME, text="\n".join(lines)))

    jobs = []
    for j, skills in enumerate(job_skills):
        jid = f"j{j:03d}"
        filler = sorted(rnd.sample(_JOB_FILLER, 25))
        company = rnd.choice(_COMPANIES)
        seniority = rnd.choice(_SENIORITY)
        head = rnd.choice(skills)
        half = len(skills) // 2
        lines = [
            f"{seniority} {head} engineer at {company}",
            "requirements " + " ".join(skills[:half]),
            "preferred " + " ".join(skills[half:]),
            "responsibilities " + " ".join(filler[:13]),
            "about the team " + " ".join(filler[13:]),
        ]
        jobs.append(Document(id=jid, kind=DocKind.JOB, text="\n".join(lines)))

    return Corpus(resumes=tuple(resumes), jobs=tuple(jobs), source=f"synthetic(seed={seed})")


def corpus_stats(corpus: Corpus) -> dict:
    """Per-kind counts, token totals, mean lengths, and overall vocab size."""
    out: dict = {"source": corpus.source}
    for name, docs in (("resumes", corpus.resumes), ("jobs", corpus.jobs)):
        lengths = [len(tokenize(d.text)) for d in docs]
        out[name] = {
            "count": len(docs),
            "tokens": sum(lengths),
            "mean_length": sum(lengths) / len(lengths) if lengths else 0.0,
        }
    all_docs = list(corpus.documents)
    try:
        out["vocab_size"] = len(build_vocabulary(all_docs))
    except ValueError:
        out["vocab_size"] = 0
    return out
