"""Command-line harness tying the library into reproducible experiments.

Every command writes a RunManifest before doing any work; `replay` re-runs
a manifest and, for the deterministic backends, reproduces CSV outputs
byte for byte. Exit codes: 0 success, 2 usage or malformed input, 3
backend or IO failure, 4 numeric divergence during training.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .blackbox import (
    RankingOracle,
    RuleBinaryOracle,
    augment_split,
    build_complex_dataset,
    build_simple_dataset,
    load_oracle_config,
    run_binary_experiment,
    run_ranking_experiment,
    save_groundtruth,
)
from .corpus import Corpus, CorpusError, corpus_stats, generate_synthetic, load_corpus, write_corpus
from .embeddings import (
    CachingBackend,
    EmbeddingServiceError,
    HashedBackend,
    RemoteBackend,
    TfIdfBackend,
)
from .nn import TrainConfig, TrainingDivergedError, save_model, write_metrics_csv
from .ranking import rank, write_ranked_csv, write_ranked_json
from .seeds import derive_seed
from .text import default_stopwords, load_stopwords
from .whitebox import (
    AttackConfig,
    AttackRun,
    DEFAULT_BUDGETS,
    DEFAULT_SHORTLIST,
    aggregate_reports,
    run_whitebox_attack,
    write_reports_csv,
    write_summary_json,
)

_GRAM_BY_NAME = {"unigram": 1, "bigram": 2, "trigram": 3}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_NUMERIC = 4


# --------------------------------------------------------------------------
# Manifest

@dataclass(frozen=True)
class RunManifest:
    command: str
    args: dict
    corpus_source: str | None
    backend: dict | None
    seed: int
    timestamp: str
    outputs: list[str]


def write_manifest(
    out_dir: Path,
    command: str,
    args: argparse.Namespace,
    corpus_source: str | None,
    backend_json: dict | None,
    outputs: Sequence[str],
) -> Path:
    """Record enough to re-run the command; written before the experiment."""
    manifest = RunManifest(
        command=command,
        args={k: v for k, v in vars(args).items() if k != "func"},
        corpus_source=corpus_source,
        backend=backend_json,
        seed=args.seed,
        timestamp=datetime.now(timezone.utc).isoformat(),
        outputs=[str(p) for p in outputs],
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True), encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# Shared helpers

def _stopwords(args: argparse.Namespace) -> frozenset[str]:
    if getattr(args, "stopwords", None):
        return load_stopwords(args.stopwords)
    return default_stopwords()


def _build_backend(args: argparse.Namespace, corpus: Corpus):
    if args.backend == "tfidf":
        return TfIdfBackend.fit(list(corpus.documents), stopwords=_stopwords(args))
    if args.backend == "hashed":
        return HashedBackend(seed=derive_seed(args.seed, "hashed-backend"), dim=args.dim)
    if args.backend == "remote":
        if not args.endpoint:
            raise ValueError("--endpoint is required with --backend remote")
        return RemoteBackend(args.endpoint)
    raise ValueError(f"unknown backend {args.backend!r}")


def _out_dir(args: argparse.Namespace, command: str) -> Path:
    return Path(args.out) if args.out else Path("runs") / command


def _parse_budgets(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"budgets must be comma-separated integers: {text!r}") from exc


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"hidden widths must be comma-separated integers: {text!r}") from exc
    return widths


def _parse_quota(pairs: Sequence[str]) -> dict[str, float]:
    quota = {}
    for pair in pairs:
        word, _, frac = pair.partition("=")
        if not word or not frac:
            raise ValueError(f"quota must look like word=fraction, got {pair!r}")
        quota[word] = float(frac)
    return quota


# --------------------------------------------------------------------------
# Commands

def cmd_rank(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    job = corpus.job(args.job_id)
    backend = _build_backend(args, corpus)
    out = _out_dir(args, "rank")
    csv_path = out / f"ranked_{job.id}.csv"
    json_path = out / f"ranked_{job.id}.json"
    write_manifest(out, "rank", args, corpus.source, backend.descriptor().to_json(),
                   [csv_path, json_path])
    ranked = rank(job, list(corpus.resumes), backend)
    write_ranked_csv(ranked, str(csv_path))
    write_ranked_json(ranked, str(json_path))
    for i, (doc_id, score) in enumerate(ranked.entries[:10], start=1):
        print(f"{i},{doc_id},{score}")
    return EXIT_OK


def cmd_attack_whitebox(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    backend = _build_backend(args, corpus)
    stopwords = _stopwords(args)
    config = AttackConfig(
        gram=_GRAM_BY_NAME[args.gram],
        shortlist=args.shortlist,
        budgets=args.budgets,
    )
    out = _out_dir(args, "attack-whitebox")
    reports_path = out / "reports.csv"
    summary_path = out / "summary.json"
    write_manifest(out, "attack-whitebox", args, corpus.source,
                   backend.descriptor().to_json(), [reports_path, summary_path])
    jobs = list(corpus.jobs)
    if args.jobs > 1 and len(jobs) > 1:
        # Each worker attacks a disjoint slice of jobs with its own cache;
        # merging in submission order keeps results order-deterministic.
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(run_whitebox_attack, [job], list(corpus.resumes),
                            config, backend, stopwords)
                for job in jobs
            ]
            runs = [f.result() for f in futures]
        run = AttackRun(
            reports=[r for item in runs for r in item.reports],
            skipped=[s for item in runs for s in item.skipped],
        )
    else:
        run = run_whitebox_attack(jobs, list(corpus.resumes), config, backend, stopwords)
    write_reports_csv(run.reports, str(reports_path))
    write_summary_json(aggregate_reports(run.reports), str(summary_path))
    print(f"wrote {len(run.reports)} report rows ({len(run.skipped)} skipped) to {reports_path}")
    return EXIT_OK


def _default_oracle_config() -> dict:
    return {"kind": "rule", "required_words": ["python"]}


def cmd_attack_blackbox(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    stopwords = _stopwords(args)
    oracle_config = load_oracle_config(args.oracle) if args.oracle else _default_oracle_config()
    train_config = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=derive_seed(args.seed, "train"),
    )
    out = _out_dir(args, "attack-blackbox")
    groundtruth_path = out / "groundtruth.jsonl"
    model_path = out / "model.json"
    metrics_path = out / "metrics.csv"
    report_path = out / "report.json"

    if args.setting == "simple":
        if oracle_config["kind"] != "rule":
            raise ValueError("--setting simple needs a rule oracle")
        oracle = RuleBinaryOracle.from_config(oracle_config)
        write_manifest(out, "attack-blackbox", args, corpus.source, None,
                       [groundtruth_path, model_path, metrics_path, report_path])
        dataset = build_simple_dataset(
            list(corpus.resumes), list(corpus.jobs), oracle,
            vocab_size=args.vocab_size or 20, stopwords=stopwords,
        )
        result, model, history = run_binary_experiment(
            dataset, oracle, train_config, hidden=args.hidden, dropout_rate=args.dropout,
        )
        report = {
            "setting": "simple",
            "acceptance_before": result.acceptance_before,
            "acceptance_after": result.acceptance_after,
            "n_test": result.n_test,
        }
        save_groundtruth(dataset, groundtruth_path)
        save_model(model, model_path)
        write_metrics_csv(history, metrics_path)
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
        print(f"acceptance before={result.acceptance_before:.4f} after={result.acceptance_after:.4f}")
        return EXIT_OK

    # complex setting
    backend = CachingBackend(_build_backend(args, corpus), maxsize=8 * args.max_pool + 1024)
    job = corpus.job(args.job_id) if args.job_id else corpus.jobs[0]
    augmented = augment_split(list(corpus.resumes))
    if len(augmented) > args.max_pool:
        augmented = augmented[: args.max_pool]
    reports_path = out / "reports.csv"
    summary_path = out / "summary.json"
    write_manifest(out, "attack-blackbox", args, corpus.source, backend.descriptor().to_json(),
                   [groundtruth_path, model_path, metrics_path, report_path,
                    reports_path, summary_path])
    dataset = build_complex_dataset(
        augmented, job, backend, vocab_size=args.vocab_size or 500, stopwords=stopwords,
    )
    oracle = RankingOracle(job=job, pool=tuple(augmented), backend=backend)
    reports, model, history = run_ranking_experiment(
        dataset, oracle, train_config, hidden=args.hidden,
        dropout_rate=args.dropout, insert_count=args.insert_count,
    )
    changes = [r.rank_change for r in reports]
    report = {
        "setting": "complex",
        "job_id": job.id,
        "n_test": len(reports),
        "mean_rank_change": sum(changes) / len(changes) if changes else 0.0,
    }
    save_groundtruth(dataset, groundtruth_path)
    save_model(model, model_path)
    write_metrics_csv(history, metrics_path)
    write_reports_csv(reports, str(reports_path))
    write_summary_json(aggregate_reports(reports), str(summary_path))
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    print(f"mean rank change over {len(reports)} test resumes: {report['mean_rank_change']:.2f}")
    return EXIT_OK


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    quota = _parse_quota(args.quota or [])
    corpus = generate_synthetic(
        seed=args.seed,
        n_resumes=args.n_resumes,
        n_jobs=args.n_jobs,
        skill_pool_size=args.skill_pool,
        overlap=args.overlap,
        skill_quota=quota or None,
    )
    out = _out_dir(args, "gen-corpus")
    try:
        write_manifest(out, "gen-corpus", args, corpus.source, None,
                       [out / "resumes", out / "jobs"])
        write_corpus(corpus, out)
    except OSError as exc:
        raise ValueError(f"cannot write corpus to {out}: {exc}") from exc
    print(f"wrote {len(corpus.resumes)} resumes and {len(corpus.jobs)} jobs to {out}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus_dir)
    stats = corpus_stats(corpus)
    text = json.dumps(stats, indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        stats_path = out / "stats.json"
        write_manifest(out, "stats", args, corpus.source, None, [stats_path])
        stats_path.write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    command = manifest.get("command")
    if command not in _COMMANDS:
        raise ValueError(f"manifest names unknown command {command!r}")
    stored = dict(manifest["args"])
    if args.out:
        stored["out"] = args.out
    return _COMMANDS[command](argparse.Namespace(**stored))


# --------------------------------------------------------------------------
# Parser

def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("tfidf", "remote", "hashed"), default="tfidf")
    p.add_argument("--endpoint", help="embedding service URL (remote backend)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stopwords", help="stopword file, one word per line (default: bundled list)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the attack loop")
    p.add_argument("--out", help="output directory (default: runs/<command>)")
    p.add_argument("--dim", type=int, default=256, help="dimension for the hashed backend")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankattack",
        description="Rank resumes against jobs and attack the ranking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="rank all resumes against one job")
    p.add_argument("corpus_dir")
    p.add_argument("job_id")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("attack-whitebox", help="keyword-insertion attack with embedding access")
    p.add_argument("corpus_dir")
    p.add_argument("--gram", choices=tuple(_GRAM_BY_NAME), default="unigram")
    p.add_argument("--budgets", type=_parse_budgets, default=DEFAULT_BUDGETS)
    p.add_argument("--shortlist", type=int, default=DEFAULT_SHORTLIST)
    _add_shared_flags(p)
    p.set_defaults(func=cmd_attack_whitebox)

    p = sub.add_parser("attack-blackbox", help="surrogate-model attack via oracle queries")
    p.add_argument("corpus_dir")
    p.add_argument("--setting", choices=("simple", "complex"), required=True)
    p.add_argument("--oracle", help="oracle config JSON (default: rule requiring 'python')")
    p.add_argument("--job-id", help="job for the complex setting (default: first job)")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--hidden", type=_parse_hidden, default=(128, 64, 32))
    p.add_argument("--vocab-size", type=int, help="feature vocab cap (simple: 20, complex: 500)")
    p.add_argument("--max-pool", type=int, default=200,
                   help="cap on the augmented resume pool in the complex setting")
    p.add_argument("--insert-count", type=int, default=50,
                   help="words inserted per resume in the complex setting")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_attack_blackbox)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus")
    p.add_argument("--n-resumes", type=int, default=100)
    p.add_argument("--n-jobs", type=int, default=50)
    p.add_argument("--skill-pool", type=int, default=300)
    p.add_argument("--overlap", type=float, default=0.3)
    p.add_argument("--quota", action="append",
                   help="word=fraction; force that exact fraction of resumes to contain word")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("stats", help="corpus statistics as JSON")
    p.add_argument("corpus_dir")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(func=cmd_replay)

    return parser


_COMMANDS = {
    "rank": cmd_rank,
    "attack-whitebox": cmd_attack_whitebox,
    "attack-blackbox": cmd_attack_blackbox,
    "gen-corpus": cmd_gen_corpus,
    "stats": cmd_stats,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EmbeddingServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (CorpusError, FileNotFoundError, NotADirectoryError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
