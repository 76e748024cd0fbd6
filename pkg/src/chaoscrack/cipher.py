"""XOR-then-circular-shift image cipher keyed by the compound chaotic sequence.

Images are ``uint8`` arrays of shape ``(M, N)`` indexed ``img[i, j]`` with
``i`` the horizontal coordinate (width ``M``) and ``j`` the vertical one
(height ``N``).  All indices are 0-based, so the XOR keystream byte for pixel
``(i, j)`` is ``S1[j*M + i]``, i.e. ``S1`` runs along rows.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .chaos import SecretKey, compound_sequence

__all__ = [
    "Keystreams",
    "ShapeError",
    "KeystreamFormatError",
    "as_image",
    "decrypt",
    "derive_keystreams",
    "encrypt",
    "encrypt_staged",
    "quantize_samples",
]

DUMP_MAGIC = b"CCKS"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sB3xII")


class ShapeError(ValueError):
    """Image and keystream dimensions disagree, or an image is malformed."""


class KeystreamFormatError(ValueError):
    """A keystream dump could not be parsed."""


def as_image(img, M: int | None = None, N: int | None = None) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"image must be a non-empty 2-D grid, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
            raise ShapeError("pixels must be integers in [0, 255]")
        arr = arr.astype(np.uint8)
    if M is not None and arr.shape != (M, N):
        raise ShapeError(f"image shape {arr.shape} does not match keystreams ({M}, {N})")
    return arr


def quantize_samples(z, levels: int) -> np.ndarray:
    """Vectorised quantizer ``floor((1+z)/2 * levels)``, capped at ``levels - 1``."""
    z = np.asarray(z, dtype=np.float64)
    return np.minimum(np.floor((1.0 + z) / 2.0 * levels), levels - 1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class Keystreams:
    s1: np.ndarray  # uint8, length M*N
    s2: np.ndarray  # int64, length N, row shifts in [0, M-1]
    s3: np.ndarray  # int64, length M, column shifts in [0, N-1]
    recovered: bool = field(default=False, kw_only=True)

    def __post_init__(self) -> None:
        s1 = np.ascontiguousarray(self.s1, dtype=np.uint8)
        s2 = np.ascontiguousarray(self.s2, dtype=np.int64)
        s3 = np.ascontiguousarray(self.s3, dtype=np.int64)
        M, N = len(s3), len(s2)
        if M < 1 or N < 1 or len(s1) != M * N:
            raise ShapeError(f"inconsistent keystream lengths {len(s1)}, {N}, {M}")
        if s2.min() < 0 or s2.max() >= M or s3.min() < 0 or s3.max() >= N:
            raise ShapeError("shift amounts out of range")
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "s3", s3)

    @property
    def M(self) -> int:
        return len(self.s3)

    @property
    def N(self) -> int:
        return len(self.s2)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Keystreams):
            return NotImplemented
        return (
            np.array_equal(self.s1, other.s1)
            and np.array_equal(self.s2, other.s2)
            and np.array_equal(self.s3, other.s3)
        )

    def to_bytes(self) -> bytes:
        """Serialize as a CCKS dump: 16-byte header, S1 bytes, then S2 and S3 as LE uint32."""
        header = _HEADER.pack(DUMP_MAGIC, DUMP_VERSION, self.M, self.N)
        return (
            header
            + self.s1.tobytes()
            + self.s2.astype("<u4").tobytes()
            + self.s3.astype("<u4").tobytes()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> Keystreams:
        if len(data) < _HEADER.size:
            raise KeystreamFormatError("dump shorter than its 16-byte header")
        magic, version, M, N = _HEADER.unpack_from(data)
        if magic != DUMP_MAGIC:
            raise KeystreamFormatError(f"bad magic {magic!r}")
        if version != DUMP_VERSION:
            raise KeystreamFormatError(f"unsupported version {version}")
        if data[5:8] != b"\0\0\0":
            raise KeystreamFormatError("reserved header bytes are not zero")
        expected = _HEADER.size + M * N + 4 * (N + M)
        if len(data) != expected:
            raise KeystreamFormatError(f"dump is {len(data)} bytes, expected {expected}")
        off = _HEADER.size
        s1 = np.frombuffer(data, np.uint8, M * N, off)
        off += M * N
        s2 = np.frombuffer(data, "<u4", N, off)
        s3 = np.frombuffer(data, "<u4", M, off + 4 * N)
        try:
            return cls(s1, s2.astype(np.int64), s3.astype(np.int64))
        except ShapeError as exc:
            raise KeystreamFormatError(str(exc)) from exc


def derive_keystreams(key: SecretKey, M: int, N: int) -> Keystreams:
    if not isinstance(key, SecretKey):
        raise TypeError("key must be a SecretKey")
    if M < 1 or N < 1:
        raise ShapeError(f"image size must be positive, got {M}x{N}")
    z, x, y, _ = compound_sequence(key.x0, key.y0, M * N)
    s1 = quantize_samples(z, 256).astype(np.uint8)

    xs = []
    for _ in range(N):
        s = x * x
        x = (8.0 * s - 8.0) * s + 1.0
        xs.append(x)
    ys = []
    for _ in range(M):
        y = y * (4.0 * y * y - 3.0)
        ys.append(y)
    return Keystreams(s1, quantize_samples(xs, M), quantize_samples(ys, N))


def _source_indices(ks: Keystreams) -> tuple[np.ndarray, np.ndarray]:
    """For every cipher pixel ``(i, j)``, the plain pixel ``(i*, j*)`` it came from."""
    i = np.arange(ks.M)[:, None]
    j = np.arange(ks.N)[None, :]
    js = (j - ks.s3[i]) % ks.N
    is_ = (i - ks.s2[js]) % ks.M
    return is_, js


def encrypt(plain, ks: Keystreams) -> np.ndarray:
    """Encrypt in one gather: ``C[i, j] = P[i*, j*] ^ S1[j*·M + i*]``."""
    p = as_image(plain, ks.M, ks.N)
    is_, js = _source_indices(ks)
    return p[is_, js] ^ ks.s1[js * ks.M + is_]


def encrypt_staged(plain, ks: Keystreams) -> np.ndarray:
    """Encrypt as three explicit passes: XOR, row rotations, column rotations."""
    p = as_image(plain, ks.M, ks.N)
    stage = p ^ ks.s1.reshape(ks.N, ks.M).T
    rows = np.empty_like(stage)
    for j in range(ks.N):
        rows[:, j] = np.roll(stage[:, j], ks.s2[j])
    out = np.empty_like(rows)
    for i in range(ks.M):
        out[i, :] = np.roll(rows[i, :], ks.s3[i])
    return out


def decrypt(cipher, ks: Keystreams) -> np.ndarray:
    c = as_image(cipher, ks.M, ks.N)
    i = np.arange(ks.M)[:, None]
    j = np.arange(ks.N)[None, :]
    is_ = (i + ks.s2[j]) % ks.M
    js = (j + ks.s3[is_]) % ks.N
    return c[is_, js] ^ ks.s1[j * ks.M + i]
