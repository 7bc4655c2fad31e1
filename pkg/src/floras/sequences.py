"""Spreading-sequence sets and keyed, collision-free signature assignment.

Two families of chip sequences are supported:

* ``orthonormal`` sets built from a Sylvester-Hadamard matrix, which are
  exactly orthonormal (the uplink decoder relies on a_i . a_j = delta_ij);
* ``gaussian`` sets with i.i.d. N(0, 1/L) entries, orthonormal only in
  expectation, for non-orthogonal (NOMA-style) operation.

Signature assignment keeps the receiver ignorant of which columns are in
use: all clients derive a shared per-round permutation of the column
indices from a secret key, and client ``i`` simply takes column ``perm(i)``.
The byte-level derivation is fixed so that independent implementations
agree:

* ``seed  = SHA256(key || round_id_be8)`` with ``round_id`` as an 8-byte
  big-endian integer;
* ``block_j = SHA256(seed || j_be4)`` for ``j = 0, 1, 2, ...`` and the byte
  stream is ``block_0 || block_1 || ...``;
* a Fisher-Yates shuffle of ``[0..N-1]`` consumes the stream; each draw in
  ``[0, m)`` reads the minimal number of whole bytes and uses rejection
  sampling, so the permutation is exactly uniform.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard

from .errors import ConfigurationError

ORTHONORMAL = "orthonormal"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class SpreadingSet:
    """A bank of spreading sequences stored as the columns of an L x N matrix."""

    columns: np.ndarray
    mode: str

    @property
    def chip_length(self) -> int:
        return self.columns.shape[0]

    @property
    def set_size(self) -> int:
        return self.columns.shape[1]

    def gram(self) -> np.ndarray:
        return self.columns.T @ self.columns


def _min_chip_length(set_size: int) -> int:
    length = 2
    while length < set_size:
        length *= 2
    return length


def generate_orthonormal_set(set_size: int) -> SpreadingSet:
    """First ``set_size`` rows of a Sylvester-Hadamard matrix, scaled by 1/sqrt(L).

    L is the smallest power of two >= set_size (minimum 2); unused Hadamard
    rows are simply not materialized.
    """
    if set_size < 1:
        raise ValueError(f"set_size must be >= 1, got {set_size}")
    length = _min_chip_length(set_size)
    basis = hadamard(length).astype(np.float64) / np.sqrt(length)
    return SpreadingSet(columns=basis[:set_size].T.copy(), mode=ORTHONORMAL)


def generate_gaussian_set(chip_length: int, set_size: int,
                          rng: np.random.Generator) -> SpreadingSet:
    """Random set with i.i.d. N(0, 1/L) entries: orthonormal in expectation."""
    if chip_length < 1 or set_size < 1:
        raise ValueError("chip_length and set_size must be >= 1")
    columns = rng.normal(0.0, 1.0 / np.sqrt(chip_length),
                         size=(chip_length, set_size))
    return SpreadingSet(columns=columns, mode=GAUSSIAN)


class _HashStream:
    """Deterministic byte stream: SHA256(seed || counter_be4), concatenated."""

    def __init__(self, seed: bytes):
        self._seed = seed
        self._counter = 0
        self._buf = b""

    def _refill(self) -> None:
        block = hashlib.sha256(
            self._seed + self._counter.to_bytes(4, "big")).digest()
        self._counter += 1
        self._buf += block

    def take(self, n: int) -> bytes:
        while len(self._buf) < n:
            self._refill()
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def randbelow(self, m: int) -> int:
        """Uniform integer in [0, m) by rejection sampling on whole bytes."""
        if m <= 1:
            return 0
        n_bytes = ((m - 1).bit_length() + 7) // 8
        span = 1 << (8 * n_bytes)
        limit = span - span % m
        while True:
            value = int.from_bytes(self.take(n_bytes), "big")
            if value < limit:
                return value % m


def derive_round_permutation(key: bytes, round_id: int, set_size: int) -> np.ndarray:
    """Shared per-round permutation of the column indices ``0..set_size-1``.

    Deterministic in (key, round_id, set_size): every party holding the key
    computes the same permutation, while a party without it learns nothing
    about which columns are in use.
    """
    if not key:
        raise ConfigurationError("signature assignment requires a non-empty key")
    if round_id < 0:
        raise ValueError(f"round_id must be >= 0, got {round_id}")
    if set_size < 1:
        raise ValueError(f"set_size must be >= 1, got {set_size}")
    seed = hashlib.sha256(key + int(round_id).to_bytes(8, "big")).digest()
    stream = _HashStream(seed)
    perm = np.arange(set_size)
    for i in range(set_size - 1, 0, -1):
        j = stream.randbelow(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def assign_signature(sset: SpreadingSet, perm: np.ndarray, my_index: int) -> np.ndarray:
    """Column used by the client holding 1-based scheduler index ``my_index``.

    Distinct indices map to distinct columns, so up to N clients are
    collision-free by construction.
    """
    if not 1 <= my_index <= sset.set_size:
        raise ValueError(
            f"my_index must be in [1, {sset.set_size}], got {my_index}")
    return sset.columns[:, perm[my_index - 1]]


@dataclass(frozen=True)
class SignatureAssignment:
    """One client's view of the per-round signature choice."""

    round_id: int
    permutation: np.ndarray
    my_index: int  # 1-based index handed out by the scheduler

    @classmethod
    def derive(cls, key: bytes, round_id: int, set_size: int,
               my_index: int) -> "SignatureAssignment":
        perm = derive_round_permutation(key, round_id, set_size)
        if not 1 <= my_index <= set_size:
            raise ValueError(
                f"my_index must be in [1, {set_size}], got {my_index}")
        return cls(round_id=round_id, permutation=perm, my_index=my_index)

    @property
    def column_index(self) -> int:
        return int(self.permutation[self.my_index - 1])

    def signature(self, sset: SpreadingSet) -> np.ndarray:
        return assign_signature(sset, self.permutation, self.my_index)
