#!/usr/bin/env python3
"""Surrogate attack on a binary accept/reject screening rule.

The attacker can only query the screener (here: "resume must mention
python"). They label single-word probes through it, train a small MLP on
the one-hot features, and then ask the model which words to add to a
rejected resume. Acceptance on held-out resumes jumps accordingly.
"""
from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rankattack.blackbox import (
    RuleBinaryOracle,
    build_simple_dataset,
    run_binary_experiment,
)
from rankattack.corpus import generate_synthetic
from rankattack.nn import TrainConfig, predict_threshold


def main() -> None:
    corpus = generate_synthetic(
        seed=26, n_resumes=100, n_jobs=3, overlap=0.3,
        skill_quota={"python": 0.2},
    )
    oracle = RuleBinaryOracle(required_words=frozenset({"python"}))
    holders = sum(oracle.accepts(r.text) for r in corpus.resumes)
    print(f"{holders} of {len(corpus.resumes)} resumes mention python; "
          "the screener accepts only those\n")

    dataset = build_simple_dataset(corpus.resumes, corpus.jobs, oracle, vocab_size=20)
    print(f"groundtruth: {len(dataset.ids)} resume/job rows, "
          f"{len(dataset.vocab_labels)} candidate words")

    config = TrainConfig(batch_size=50, epochs=100, learning_rate=0.005, seed=26)
    result, model, history = run_binary_experiment(dataset, oracle, config)
    print(f"trained {config.epochs} epochs; "
          f"final validation f1 {history[-1].f1:.3f}\n")

    print(f"held-out acceptance before insertion: {result.acceptance_before:.2f}")
    print(f"held-out acceptance after insertion:  {result.acceptance_after:.2f}")

    # What does the surrogate tell one rejected resume to add?
    reject = next(i for i, (r, _) in enumerate(dataset.sources)
                  if not oracle.accepts(r.text))
    picked = sorted(predict_threshold(model, dataset.x[reject].astype(float), 0.5))
    words = [dataset.vocab_labels.words[j] for j in picked]
    print(f"\nsurrogate advice for {dataset.sources[reject][0].id}: add {words}")


if __name__ == "__main__":
    main()
