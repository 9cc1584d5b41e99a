#!/usr/bin/env python3
"""Surrogate attack on the full ranker, compared with its white-box teacher.

The attacker grows a training pool by recombining resume halves, labels
each pool member with its best insertion words through rank queries only,
trains an MLP, and attacks held-out resumes with the model's top picks.
The white-box attack on the same pool is the upper bound to beat.
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rankattack.blackbox import (
    RankingOracle,
    augment_split,
    build_complex_dataset,
    run_ranking_experiment,
)
from rankattack.corpus import generate_synthetic
from rankattack.embeddings import TfIdfBackend
from rankattack.nn import TrainConfig
from rankattack.whitebox import AttackConfig, run_whitebox_attack


def main() -> None:
    corpus = generate_synthetic(seed=7, n_resumes=10, n_jobs=1, overlap=0.3)
    pool = tuple(augment_split(corpus.resumes))
    job = corpus.jobs[0]
    backend = TfIdfBackend.fit(list(pool) + [job])
    print(f"augmented {len(corpus.resumes)} resumes into a pool of {len(pool)}\n")

    budget = 10
    wb = run_whitebox_attack([job], list(pool),
                             AttackConfig(budgets=(budget,)), backend)
    wb_mean = sum(r.rank_change for r in wb.reports) / len(wb.reports)
    print(f"white-box teacher at budget {budget}: mean rank change {wb_mean:.2f}")

    dataset = build_complex_dataset(pool, job, backend)
    oracle = RankingOracle(job=job, pool=pool, backend=backend)
    config = TrainConfig(batch_size=10, epochs=80, learning_rate=0.005, seed=3)
    reports, _, _ = run_ranking_experiment(dataset, oracle, config,
                                           insert_count=budget)
    bb_mean = sum(r.rank_change for r in reports) / len(reports)
    print(f"black-box surrogate at budget {budget}: mean rank change {bb_mean:.2f} "
          f"({100 * bb_mean / wb_mean:.0f}% of the teacher, "
          f"{len(reports)} held-out resumes)\n")

    print("sample rows:")
    for r in sorted(reports, key=lambda r: -r.rank_change)[:5]:
        print(f"  {r.resume_id:<10} rank {r.rank_before:>3} -> {r.rank_after:<3} "
              f"inserted {', '.join(r.inserted[:4])}...")


if __name__ == "__main__":
    main()
