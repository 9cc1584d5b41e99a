"""Deterministic seed derivation.

Experiments take one master seed; every stochastic component (corpus
generation, weight init, shuffling, hashed projections) gets its own child
seed derived from the master and a stable label. Children are independent
of declaration order and reproducible across processes, unlike Python's
salted built-in hash.
"""

from __future__ import annotations

import hashlib

_SEED_BYTES = 8


def derive_seed(master: int, label: str) -> int:
    """Child seed for `label`, stable across runs and platforms."""
    if not label:
        raise ValueError("label must be non-empty")
    h = hashlib.blake2b(
        label.encode("utf-8"),
        key=str(int(master)).encode("ascii"),
        digest_size=_SEED_BYTES,
    )
    return int.from_bytes(h.digest(), "big")
