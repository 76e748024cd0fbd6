"""Differential chosen-plaintext attack recovering S3, S2 and S1 from three queries.

XORing two ciphertexts produced under one key cancels the substitution layer,
leaving a circularly shifted copy of the plaintext difference.  A difference
that is constant along rows and carries a single zero per column exposes the
column shifts; the transposed pattern then exposes the row shifts.  With both
permutations known, one known plaintext/ciphertext pair yields S1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chaos import SecretKey
from .cipher import Keystreams, ShapeError, as_image, derive_keystreams, encrypt

__all__ = [
    "AttackModelError",
    "ChosenImageSet",
    "EncryptionOracle",
    "RecoveredKeystreams",
    "attack_end_to_end",
    "build_chosen_images",
    "recover_S1",
    "recover_S2",
    "recover_S3",
    "synthetic_image",
]


class AttackModelError(ValueError):
    """Ciphertexts do not show the single-zero pattern the attack expects."""


def _row_marker(M: int, N: int) -> np.ndarray:
    d = np.full((M, N), 255, dtype=np.uint8)
    d[:, 0] = 0
    return d


def _column_marker(M: int, N: int) -> np.ndarray:
    d = np.full((M, N), 255, dtype=np.uint8)
    d[0, :] = 0
    return d


@dataclass(frozen=True, eq=False)
class ChosenImageSet:
    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray

    @property
    def d12(self) -> np.ndarray:
        return self.i1 ^ self.i2

    @property
    def d13(self) -> np.ndarray:
        return self.i1 ^ self.i3


class RecoveredKeystreams(Keystreams):
    """Keystreams obtained by the attack; ``queries`` counts oracle calls used."""

    def __init__(self, s1, s2, s3, queries: int = 0) -> None:
        super().__init__(s1, s2, s3, recovered=True)
        object.__setattr__(self, "queries", queries)


class EncryptionOracle:
    """Encrypts submitted images under a key the caller cannot read back.

    Stands in for a remote encryption service: the key is captured in a
    closure and only the image-in/image-out surface is exposed.
    """

    def __init__(self, key: SecretKey, M: int, N: int) -> None:
        ks = derive_keystreams(key, M, N)
        self._encrypt: Callable[[np.ndarray], np.ndarray] = lambda img: encrypt(img, ks)
        self.shape = (M, N)
        self.queries = 0

    def __call__(self, img) -> np.ndarray:
        self.queries += 1
        return self._encrypt(img)


def build_chosen_images(i1) -> ChosenImageSet:
    """Derive I2 and I3 from an arbitrary I1.

    ``I1 ^ I2`` is 0 on row ``j = 0`` and 255 elsewhere; ``I1 ^ I3`` is 0 on
    column ``i = 0`` and 255 elsewhere.
    """
    i1 = as_image(i1)
    M, N = i1.shape
    return ChosenImageSet(i1.copy(), i1 ^ _row_marker(M, N), i1 ^ _column_marker(M, N))


def _sole_zero(line: np.ndarray, what: str, index: int) -> int:
    zeros = np.flatnonzero(line == 0)
    if len(zeros) != 1:
        raise AttackModelError(f"{what} {index}: expected one zero, found {len(zeros)}")
    return int(zeros[0])


def recover_S3(c1, c2) -> np.ndarray:
    c1, c2 = as_image(c1), as_image(c2)
    if c1.shape != c2.shape:
        raise ShapeError("ciphertext shapes differ")
    M, N = c1.shape
    if N == 1:
        return np.zeros(M, dtype=np.int64)
    d = c1 ^ c2
    # The zero starts on row 0, so its landing row is the shift itself.
    return np.array([_sole_zero(d[i, :], "column", i) for i in range(M)], dtype=np.int64)


def recover_S2(c1, c3, s3) -> np.ndarray:
    c1, c3 = as_image(c1), as_image(c3)
    if c1.shape != c3.shape:
        raise ShapeError("ciphertext shapes differ")
    M, N = c1.shape
    s3 = np.asarray(s3, dtype=np.int64)
    if len(s3) != M:
        raise ShapeError(f"S3 has length {len(s3)}, expected {M}")
    if M == 1:
        return np.zeros(N, dtype=np.int64)
    d = c1 ^ c3
    i = np.arange(M)[:, None]
    j = np.arange(N)[None, :]
    unshifted = d[i, (j + s3[:, None]) % N]
    return np.array([_sole_zero(unshifted[:, j], "row", j) for j in range(N)], dtype=np.int64)


def recover_S1(i1, c1, s2, s3) -> np.ndarray:
    i1, c1 = as_image(i1), as_image(c1)
    M, N = i1.shape
    if c1.shape != (M, N):
        raise ShapeError("plain and cipher shapes differ")
    s2 = np.asarray(s2, dtype=np.int64)
    s3 = np.asarray(s3, dtype=np.int64)
    if len(s2) != N or len(s3) != M:
        raise ShapeError("shift sequences do not match the image size")
    i = np.arange(M)[:, None]
    j = np.arange(N)[None, :]
    is_ = (i + s2[j]) % M
    js = (j + s3[is_]) % N
    s1 = np.empty(M * N, dtype=np.uint8)
    s1[(j * M + i).ravel()] = (i1 ^ c1[is_, js]).ravel()
    return s1


def attack_end_to_end(
    oracle: Callable[[np.ndarray], np.ndarray], i1, transcript: list | None = None
) -> RecoveredKeystreams:
    """Break the cipher behind ``oracle`` with exactly three chosen plaintexts.

    If ``transcript`` is given, each ``(plain, cipher)`` query pair is appended.
    """
    chosen = build_chosen_images(i1)
    queries = 0

    def query(img: np.ndarray) -> np.ndarray:
        nonlocal queries
        queries += 1
        out = as_image(oracle(img), *img.shape)
        if transcript is not None:
            transcript.append((img, out))
        return out

    c1 = query(chosen.i1)
    c2 = query(chosen.i2)
    c3 = query(chosen.i3)
    s3 = recover_S3(c1, c2)
    s2 = recover_S2(c1, c3, s3)
    s1 = recover_S1(chosen.i1, c1, s2, s3)
    return RecoveredKeystreams(s1, s2, s3, queries=queries)


def synthetic_image(M: int, N: int, seed: int = 0) -> np.ndarray:
    """A smooth, photo-like test picture: overlapping soft blobs plus mild noise."""
    rng = np.random.default_rng(seed)
    i = np.linspace(0, 1, M)[:, None]
    j = np.linspace(0, 1, N)[None, :]
    img = 60 + 40 * i + 30 * j
    for _ in range(7):
        ci, cj = rng.uniform(0, 1, 2)
        r = rng.uniform(0.08, 0.3)
        amp = rng.uniform(-90, 140)
        img = img + amp * np.exp(-((i - ci) ** 2 + (j - cj) ** 2) / (2 * r * r))
    img = img + rng.normal(0, 4, size=(M, N))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)
