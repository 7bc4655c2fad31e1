"""Deterministic random-stream derivation.

Every piece of randomness in an experiment is drawn from a stream derived
from a single master seed plus a tuple of purpose labels, e.g.

    rng = derive_rng(master_seed, "local", trial, round_idx, client_id)

Two runs with the same master seed therefore produce identical results no
matter how trials are scheduled, and two streams with different labels are
statistically independent (the label tuple is hashed with SHA-256).
"""

import hashlib

import numpy as np


def derive_seed(master_seed: int, *labels) -> int:
    """Map (master_seed, labels...) to a 128-bit stream seed."""
    h = hashlib.sha256()
    h.update(int(master_seed).to_bytes(16, "big", signed=True))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:16], "big")


def derive_rng(master_seed: int, *labels) -> np.random.Generator:
    """A fresh numpy Generator for the given purpose labels."""
    return np.random.default_rng(derive_seed(master_seed, *labels))
