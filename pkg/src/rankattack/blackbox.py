"""Black-box attacks: oracle-labeled datasets, surrogate training, experiments.

The attacker cannot see the ranker's internals, only query it. Two oracle
flavors are modeled: a rule-based accept/reject screen and a full ranking
oracle. Groundtruth datasets are built by probing the oracle, a surrogate
network is trained on them, and the surrogate's predicted words are
inserted to measure how much of the white-box gain survives the loss of
access.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .embeddings import EmbeddingBackend
from .nn import (
    MlpModel,
    TrainConfig,
    EpochMetrics,
    init_model,
    predict_threshold,
    predict_topk,
    train,
)
from .ranking import rank, rank_of
from .seeds import derive_seed
from .text import Document, Vocabulary, build_vocabulary, default_stopwords, one_hot, tokenize
from .whitebox import (
    RankReport,
    insert_phrases,
    rescore_keywords_for_resume,
    score_keywords_by_deletion,
)

logger = logging.getLogger(__name__)

CONCAT_SEPARATOR = "\n"
RANKING_LABEL_COUNT = 50


# --------------------------------------------------------------------------
# Oracles

@dataclass(frozen=True)
class RuleBinaryOracle:
    """Accept a resume iff every required word appears in its tokens."""

    required_words: frozenset[str]

    def __post_init__(self) -> None:
        if not self.required_words:
            raise ValueError("required_words must be non-empty")
        bad = {w for w in self.required_words if w != w.lower() or not w}
        if bad:
            raise ValueError(f"required words must be lowercase and non-empty: {sorted(bad)}")

    def accepts(self, text: str) -> bool:
        return self.required_words <= set(tokenize(text))

    @classmethod
    def from_config(cls, config: Mapping) -> "RuleBinaryOracle":
        if config.get("kind") != "rule":
            raise ValueError(f"not a rule oracle config: {config!r}")
        return cls(required_words=frozenset(config["required_words"]))


@dataclass
class RankingOracle:
    """Query-only view of the ranker: one job, a fixed pool, a live backend."""

    job: Document
    pool: tuple[Document, ...]
    backend: EmbeddingBackend

    def __post_init__(self) -> None:
        ids = [d.id for d in self.pool]
        if len(set(ids)) != len(ids):
            raise ValueError("ranking oracle pool has duplicate ids")

    def ranks(self) -> dict[str, int]:
        ranked = rank(self.job, list(self.pool), self.backend)
        return {doc_id: i + 1 for i, (doc_id, _) in enumerate(ranked.entries)}

    def rank_with_text(self, doc_id: str, text: str) -> int:
        """Rank of pool member `doc_id` after swapping in replacement text."""
        if doc_id not in {d.id for d in self.pool}:
            raise KeyError(f"{doc_id!r} is not in the oracle pool")
        swapped = [
            Document(id=d.id, kind=d.kind, text=text) if d.id == doc_id else d
            for d in self.pool
        ]
        return rank_of(rank(self.job, swapped, self.backend), doc_id)


def load_oracle_config(path: str | Path) -> dict:
    config = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = config.get("kind")
    if kind not in ("rule", "ranking"):
        raise ValueError(f"unknown oracle kind {kind!r} in {path}")
    return config


# --------------------------------------------------------------------------
# Data augmentation

def augment_concat(resumes: Sequence[Document], jobs: Sequence[Document]) -> list[Document]:
    """Every resume prefixed to every job; ids are '<resume_id>+<job_id>'."""
    if not resumes or not jobs:
        raise ValueError("augment_concat needs at least one resume and one job")
    out = []
    for r in resumes:
        for j in jobs:
            out.append(Document(
                id=f"{r.id}+{j.id}",
                kind=r.kind,
                text=r.text + CONCAT_SEPARATOR + j.text,
            ))
    return out


def _halves(doc: Document) -> tuple[list[str], list[str]]:
    lines = doc.text.split("\n")
    mid = (len(lines) + 1) // 2  # upper half keeps the extra line when odd
    return lines[:mid], lines[mid:]


def augment_split(resumes: Sequence[Document]) -> list[Document]:
    """All upper-half x lower-half recombinations; ids '<upper>x<lower>'.

    Single-line resumes cannot be halved and are skipped with a warning.
    Recombining a resume with itself reproduces its text exactly.
    """
    usable = []
    for doc in resumes:
        if len(doc.text.split("\n")) < 2:
            logger.warning("augment_split: skipping single-line resume %r", doc.id)
            continue
        usable.append(doc)
    out = []
    for upper in usable:
        top, _ = _halves(upper)
        for lower in usable:
            _, bottom = _halves(lower)
            out.append(Document(
                id=f"{upper.id}x{lower.id}",
                kind=upper.kind,
                text="\n".join(top + bottom),
            ))
    return out


# --------------------------------------------------------------------------
# Labeling

def label_binary(
    resume: Document,
    job: Document,
    oracle: RuleBinaryOracle,
    vocab_labels: Vocabulary,
) -> np.ndarray:
    """label[w] = 1 iff the oracle rejects the resume but accepts resume+w.

    An already-accepted resume gets all zeros: no single word is needed.
    The job is part of the query context but a rule oracle ignores it.
    """
    del job
    labels = np.zeros(len(vocab_labels), dtype=np.uint8)
    if oracle.accepts(resume.text):
        return labels
    for i, word in enumerate(vocab_labels.words):
        if oracle.accepts(insert_phrases(resume.text, [word])):
            labels[i] = 1
    return labels


def label_ranking(
    resume: Document,
    job: Document,
    vocab_labels: Vocabulary,
    backend: EmbeddingBackend,
    stopwords: frozenset[str] | None = None,
) -> np.ndarray:
    """Mark the up-to-50 best insertion words for this (job, resume) pair.

    Runs unigram deletion scoring on the job, re-sorts per resume by
    insertion gain, then walks that ordering collecting words present in
    vocab_labels until 50 are set or candidates run out.
    """
    phase1 = score_keywords_by_deletion(job, 1, backend, stopwords=stopwords)
    phase2 = rescore_keywords_for_resume(job, resume, phase1, backend)
    labels = np.zeros(len(vocab_labels), dtype=np.uint8)
    count = 0
    for ks in phase2:
        idx = vocab_labels.index.get(ks.phrase)
        if idx is None or labels[idx]:
            continue
        labels[idx] = 1
        count += 1
        if count >= RANKING_LABEL_COUNT:
            break
    return labels


# --------------------------------------------------------------------------
# Groundtruth datasets

@dataclass
class GroundtruthSet:
    """Aligned feature/label matrices plus the vocabularies that define them.

    `sources` keeps the live documents behind each row so experiments can
    re-query the oracle with modified text; it is not serialized.
    """

    ids: tuple[str, ...]
    x: np.ndarray
    y: np.ndarray
    vocab_features: Vocabulary
    vocab_labels: Vocabulary
    sources: tuple[tuple[Document, Document | None], ...]

    def __post_init__(self) -> None:
        if not (len(self.ids) == self.x.shape[0] == self.y.shape[0] == len(self.sources)):
            raise ValueError("row counts of ids, x, y, and sources must agree")
        if self.x.shape[1] % len(self.vocab_features) != 0:
            raise ValueError("x width must be a multiple of the feature vocab size")
        if self.y.shape[1] != len(self.vocab_labels):
            raise ValueError("y width must equal the label vocab size")


def build_simple_dataset(
    resumes: Sequence[Document],
    jobs: Sequence[Document],
    oracle: RuleBinaryOracle,
    vocab_size: int = 20,
    stopwords: frozenset[str] | None = None,
) -> GroundtruthSet:
    """One row per (resume, job) pair: features are the concatenated one-hot
    vectors of both documents over the most-frequent-word vocabulary; labels
    come from single-word oracle probes over that same vocabulary."""
    if not resumes or not jobs:
        raise ValueError("need at least one resume and one job")
    if stopwords is None:
        stopwords = default_stopwords()
    vocab = build_vocabulary(list(resumes) + list(jobs), max_size=vocab_size,
                             stopwords=stopwords)
    ids = []
    rows_x = []
    rows_y = []
    sources = []
    resume_hot = {r.id: one_hot(tokenize(r.text), vocab) for r in resumes}
    job_hot = {j.id: one_hot(tokenize(j.text), vocab) for j in jobs}
    label_cache: dict[str, np.ndarray] = {}
    for r in resumes:
        for j in jobs:
            ids.append(f"{r.id}+{j.id}")
            rows_x.append(np.concatenate([resume_hot[r.id], job_hot[j.id]]))
            # A rule oracle ignores the job, so one probe pass per resume.
            if r.id not in label_cache:
                label_cache[r.id] = label_binary(r, j, oracle, vocab)
            rows_y.append(label_cache[r.id])
            sources.append((r, j))
    return GroundtruthSet(
        ids=tuple(ids),
        x=np.stack(rows_x),
        y=np.stack(rows_y),
        vocab_features=vocab,
        vocab_labels=vocab,
        sources=tuple(sources),
    )


def build_complex_dataset(
    resumes: Sequence[Document],
    job: Document,
    backend: EmbeddingBackend,
    vocab_size: int = 500,
    stopwords: frozenset[str] | None = None,
) -> GroundtruthSet:
    """One row per (augmented) resume against a single job.

    Features are resume one-hots over a frequency vocabulary; the label
    vocabulary is the job's distinct words capped at 50 in deletion-
    influence order, and each row's labels are that resume's best
    insertion words.
    """
    if not resumes:
        raise ValueError("need at least one resume")
    if stopwords is None:
        stopwords = default_stopwords()
    vocab_features = build_vocabulary(list(resumes), max_size=vocab_size,
                                      stopwords=stopwords)
    phase1 = score_keywords_by_deletion(job, 1, backend, stopwords=stopwords)
    label_words = [ks.phrase for ks in phase1[:RANKING_LABEL_COUNT]]
    vocab_labels = Vocabulary.from_words(label_words)
    ids = []
    rows_x = []
    rows_y = []
    sources: list[tuple[Document, Document | None]] = []
    for r in resumes:
        ids.append(r.id)
        rows_x.append(one_hot(tokenize(r.text), vocab_features))
        rows_y.append(label_ranking(r, job, vocab_labels, backend, stopwords=stopwords))
        sources.append((r, job))
    return GroundtruthSet(
        ids=tuple(ids),
        x=np.stack(rows_x),
        y=np.stack(rows_y),
        vocab_features=vocab_features,
        vocab_labels=vocab_labels,
        sources=tuple(sources),
    )


def save_groundtruth(dataset: GroundtruthSet, path: str | Path) -> None:
    """JSON-lines export: one row per record, set bits as sparse indices."""
    with open(path, "w", encoding="utf-8") as fh:
        for row_id, xr, yr in zip(dataset.ids, dataset.x, dataset.y):
            record = {
                "id": row_id,
                "x": [int(i) for i in np.flatnonzero(xr)],
                "y": [int(i) for i in np.flatnonzero(yr)],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_groundtruth(
    path: str | Path, n_features: int, n_labels: int
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Inverse of save_groundtruth given the matrix widths."""
    ids = []
    xs = []
    ys = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            x = np.zeros(n_features, dtype=np.uint8)
            x[record["x"]] = 1
            y = np.zeros(n_labels, dtype=np.uint8)
            y[record["y"]] = 1
            ids.append(record["id"])
            xs.append(x)
            ys.append(y)
    return tuple(ids), np.stack(xs), np.stack(ys)


# --------------------------------------------------------------------------
# Experiments

def _split_rows(n: int, seed: int, test_fraction: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    """Single seeded shuffle, then split by position: (train, test)."""
    rng = np.random.default_rng(derive_seed(seed, "experiment-split"))
    perm = rng.permutation(n)
    n_test = int(round(test_fraction * n))
    if n_test == 0 or n_test == n:
        raise ValueError(f"degenerate train/test split for {n} rows")
    return perm[n_test:], perm[:n_test]


@dataclass(frozen=True)
class BinaryExperimentResult:
    acceptance_before: float
    acceptance_after: float
    n_test: int
    test_ids: tuple[str, ...]


def run_binary_experiment(
    dataset: GroundtruthSet,
    oracle: RuleBinaryOracle,
    config: TrainConfig,
    hidden: Sequence[int] = (128, 64, 32),
    dropout_rate: float = 0.1,
) -> tuple[BinaryExperimentResult, MlpModel, list[EpochMetrics]]:
    """Train the surrogate, then compare oracle acceptance on held-out rows
    before and after inserting every word the model scores at or above 0.5."""
    train_idx, test_idx = _split_rows(len(dataset.ids), config.seed)
    model = init_model(
        dataset.x.shape[1], dataset.y.shape[1], hidden=hidden,
        dropout_rate=dropout_rate, seed=derive_seed(config.seed, "model-init"),
    )
    if config.epochs > 0:
        model, history = train(model, dataset.x[train_idx], dataset.y[train_idx], config)
    else:
        history = []
    accepted_before = 0
    accepted_after = 0
    for i in test_idx:
        resume, _ = dataset.sources[i]
        if oracle.accepts(resume.text):
            accepted_before += 1
        indices = sorted(predict_threshold(model, dataset.x[i].astype(float), 0.5))
        words = [dataset.vocab_labels.words[j] for j in indices]
        if oracle.accepts(insert_phrases(resume.text, words)):
            accepted_after += 1
    n_test = len(test_idx)
    result = BinaryExperimentResult(
        acceptance_before=accepted_before / n_test,
        acceptance_after=accepted_after / n_test,
        n_test=n_test,
        test_ids=tuple(dataset.ids[i] for i in test_idx),
    )
    return result, model, history


def run_ranking_experiment(
    dataset: GroundtruthSet,
    oracle: RankingOracle,
    config: TrainConfig,
    hidden: Sequence[int] = (128, 64, 32),
    dropout_rate: float = 0.1,
    insert_count: int = RANKING_LABEL_COUNT,
) -> tuple[list[RankReport], MlpModel, list[EpochMetrics]]:
    """Train the surrogate, then re-rank each held-out resume after inserting
    its top predicted words. Report rows mirror the white-box format."""
    train_idx, test_idx = _split_rows(len(dataset.ids), config.seed)
    model = init_model(
        dataset.x.shape[1], dataset.y.shape[1], hidden=hidden,
        dropout_rate=dropout_rate, seed=derive_seed(config.seed, "model-init"),
    )
    if config.epochs > 0:
        model, history = train(model, dataset.x[train_idx], dataset.y[train_idx], config)
    else:
        history = []
    baseline_ranks = oracle.ranks()
    k = min(insert_count, model.output_dim)
    reports = []
    for i in test_idx:
        resume, _ = dataset.sources[i]
        if resume.id not in baseline_ranks:
            raise KeyError(f"test resume {resume.id!r} is not in the oracle pool")
        indices = predict_topk(model, dataset.x[i].astype(float), k)
        words = [dataset.vocab_labels.words[j] for j in indices]
        rank_before = baseline_ranks[resume.id]
        rank_after = oracle.rank_with_text(resume.id, insert_phrases(resume.text, words))
        reports.append(RankReport(
            job_id=oracle.job.id,
            resume_id=resume.id,
            gram=1,
            budget=k,
            rank_before=rank_before,
            rank_after=rank_after,
            rank_change=rank_before - rank_after,
            inserted=tuple(words),
        ))
    return reports, model, history
