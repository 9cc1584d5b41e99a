"""Embedding-based resume ranking and rank-manipulation attacks.

A similarity ranker scores resumes against a job description by cosine
similarity of document embeddings; this package implements that ranker
over three interchangeable backends (native TF-IDF, a remote sentence-
embedding service, a seeded hashed projection) plus two attacks on it:
a white-box keyword-insertion attack with full embedding access and a
black-box attack that trains a surrogate network from oracle queries.
"""

from .blackbox import (
    BinaryExperimentResult,
    GroundtruthSet,
    RankingOracle,
    RuleBinaryOracle,
    augment_concat,
    augment_split,
    build_complex_dataset,
    build_simple_dataset,
    label_binary,
    label_ranking,
    load_groundtruth,
    run_binary_experiment,
    run_ranking_experiment,
    save_groundtruth,
)
from .corpus import Corpus, CorpusError, corpus_stats, generate_synthetic, load_corpus, write_corpus
from .embeddings import (
    BackendDescriptor,
    CachingBackend,
    EmbeddingBackend,
    EmbeddingServiceError,
    HashedBackend,
    ProtocolError,
    RemoteBackend,
    TfIdfBackend,
    TfIdfModel,
    TransportError,
    cosine_similarity,
    embed_hashed,
    embed_remote,
    embed_tfidf,
    fit_tfidf,
    load_tfidf,
    save_tfidf,
)
from .nn import (
    AdamState,
    EpochMetrics,
    Gradients,
    MlpModel,
    TrainConfig,
    TrainingDivergedError,
    adam_step,
    backward,
    bce_loss,
    forward,
    init_adam_state,
    init_model,
    load_model,
    micro_metrics,
    predict_threshold,
    predict_topk,
    save_model,
    train,
    write_metrics_csv,
)
from .ranking import RankedList, rank, rank_of, score_of, write_ranked_csv, write_ranked_json
from .seeds import derive_seed
from .text import (
    DocKind,
    Document,
    Vocabulary,
    build_vocabulary,
    default_stopwords,
    filter_stopwords,
    load_stopwords,
    ngrams,
    one_hot,
    tokenize,
)
from .whitebox import (
    AttackConfig,
    AttackRun,
    DEFAULT_BUDGETS,
    DEFAULT_SHORTLIST,
    KeywordScore,
    RankReport,
    aggregate_reports,
    insert_phrases,
    rescore_keywords_for_resume,
    run_whitebox_attack,
    score_keywords_by_deletion,
    write_reports_csv,
    write_summary_json,
)

__version__ = "0.1.0"
