"""Weak keys, equivalent keys and plaintext sensitivity of the cipher."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .chaos import SecretKey
from .cipher import Keystreams, as_image, derive_keystreams, encrypt

__all__ = [
    "EquivalenceResult",
    "SensitivityReport",
    "StreamShape",
    "WEAK_KEY_CLASSES",
    "WeakKeyClass",
    "WeakKeyReport",
    "check_equivalent_keys",
    "detect_weak_key",
    "format_record",
    "measure_sensitivity",
    "predicted_streams",
    "random_nonweak_keys",
]

# Fixed points f0(1)=1, f1(1)=1, f1(0)=0, f1(-1)=-1 and their one-step preimages
# f0(0)=f0(-1)=1, f1(-0.5)=1, f1(0.5)=-1.
X_SPECIAL = {1.0: "fixed", 0.0: "pre-fixed", -1.0: "pre-fixed"}
Y_SPECIAL = {1.0: "fixed", 0.0: "fixed", -1.0: "fixed", 0.5: "pre-fixed", -0.5: "pre-fixed"}


@dataclass(frozen=True)
class StreamShape:
    """A predicted stream: ``value`` everywhere except at listed 0-based positions."""

    value: int
    exceptions: tuple[tuple[int, int], ...] = ()

    def materialize(self, length: int) -> np.ndarray:
        out = np.full(length, self.value, dtype=np.int64)
        for k, v in self.exceptions:
            if k < length:
                out[k] = v
        return out


# Predicted streams are functions of (M, N); the "N/2" of the analysis is the
# quantizer image of 0, i.e. floor(N/2).
Prediction = Callable[[int, int], dict[str, StreamShape]]


@dataclass(frozen=True)
class WeakKeyClass:
    name: str
    kind: str  # "general" | "extreme" | "derived" | "derived-extreme"
    members: Callable[[float, float], bool]
    predict: Prediction
    examples: tuple[tuple[float, float], ...]


def _c(v: int, *exc: tuple[int, int]) -> StreamShape:
    return StreamShape(v, tuple(exc))


WEAK_KEY_CLASSES: tuple[WeakKeyClass, ...] = (
    WeakKeyClass("x0=1", "general", lambda x, y: x == 1,
                 lambda M, N: {"s2": _c(M - 1)},
                 ((1.0, 0.3), (1.0, -0.7))),
    WeakKeyClass("y0=1", "general", lambda x, y: y == 1,
                 lambda M, N: {"s1": _c(255), "s3": _c(N - 1)},
                 ((0.3, 1.0), (-0.9, 1.0))),
    WeakKeyClass("y0=-1", "general", lambda x, y: y == -1,
                 lambda M, N: {"s3": _c(0)},
                 ((0.3, -1.0), (-0.6, -1.0))),
    WeakKeyClass("x0>=0,y0=0", "general", lambda x, y: x >= 0 and y == 0,
                 lambda M, N: {"s1": _c(128), "s3": _c(N // 2)},
                 ((0.3, 0.0), (0.77, 0.0))),
    WeakKeyClass("x0=1,y0=1", "extreme", lambda x, y: (x, y) == (1, 1),
                 lambda M, N: {"s1": _c(255), "s2": _c(M - 1), "s3": _c(N - 1)},
                 ((1.0, 1.0),)),
    WeakKeyClass("x0=1,y0=-1", "extreme", lambda x, y: (x, y) == (1, -1),
                 lambda M, N: {"s1": _c(0), "s2": _c(M - 1), "s3": _c(0)},
                 ((1.0, -1.0),)),
    WeakKeyClass("x0=1,y0=0", "extreme", lambda x, y: (x, y) == (1, 0),
                 lambda M, N: {"s1": _c(128), "s2": _c(M - 1), "s3": _c(N // 2)},
                 ((1.0, 0.0),)),
    WeakKeyClass("x0 in {0,-1}", "derived", lambda x, y: x in (0, -1),
                 lambda M, N: {"s2": _c(M - 1)},
                 ((0.0, 0.3), (-1.0, 0.3), (0.0, -0.8))),
    WeakKeyClass("y0=-0.5", "derived", lambda x, y: y == -0.5,
                 lambda M, N: {"s3": _c(N - 1)},
                 ((0.3, -0.5), (0.8, -0.5))),
    WeakKeyClass("y0=0.5", "derived", lambda x, y: y == 0.5,
                 lambda M, N: {"s3": _c(0)},
                 ((0.3, 0.5), (-0.2, 0.5))),
    WeakKeyClass("x0 in {0,-1},y0 in {-0.5,1}", "derived-extreme",
                 lambda x, y: x in (0, -1) and y in (-0.5, 1),
                 lambda M, N: {"s1": _c(255), "s2": _c(M - 1), "s3": _c(N - 1)},
                 ((0.0, -0.5), (0.0, 1.0), (-1.0, -0.5), (-1.0, 1.0))),
    WeakKeyClass("x0=0,y0=0.5", "derived-extreme", lambda x, y: (x, y) == (0, 0.5),
                 lambda M, N: {"s1": _c(0, (1, 255)), "s2": _c(M - 1), "s3": _c(0)},
                 ((0.0, 0.5),)),
    WeakKeyClass("x0=0,y0=-1 or x0=-1,y0 in {-1,0.5}", "derived-extreme",
                 lambda x, y: (x, y) in ((0, -1), (-1, -1), (-1, 0.5)),
                 lambda M, N: {"s1": _c(0, (0, 255)), "s2": _c(M - 1), "s3": _c(0)},
                 ((0.0, -1.0), (-1.0, -1.0), (-1.0, 0.5))),
    WeakKeyClass("x0=0,y0=0", "derived-extreme", lambda x, y: (x, y) == (0, 0),
                 lambda M, N: {"s1": _c(128), "s2": _c(M - 1), "s3": _c(N // 2)},
                 ((0.0, 0.0),)),
    WeakKeyClass("x0=-1,y0=0", "derived-extreme", lambda x, y: (x, y) == (-1, 0),
                 lambda M, N: {"s1": _c(128, (0, 255)), "s2": _c(M - 1), "s3": _c(N // 2)},
                 ((-1.0, 0.0),)),
)


def predicted_streams(key: SecretKey, M: int, N: int) -> dict[str, StreamShape]:
    """Merge the stream predictions of every listed class the key belongs to."""
    merged: dict[str, StreamShape] = {}
    for cls in WEAK_KEY_CLASSES:
        if cls.members(key.x0, key.y0):
            merged.update(cls.predict(M, N))
    return merged


@dataclass(frozen=True)
class StreamDegeneracy:
    constant: int | None
    longest_run: int
    run_value: int


def _degeneracy(a: np.ndarray) -> StreamDegeneracy:
    a = np.asarray(a)
    if len(a) == 0:
        return StreamDegeneracy(None, 0, 0)
    edges = np.flatnonzero(np.diff(a) != 0) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [len(a)])))
    k = int(np.argmax(lengths))
    const = int(a[0]) if len(starts) == 1 else None
    return StreamDegeneracy(const, int(lengths[k]), int(a[starts[k]]))


@dataclass(frozen=True)
class Hit:
    step: int
    coordinate: str
    value: float
    kind: str


@dataclass(frozen=True)
class WeakKeyReport:
    key: SecretKey
    classes: tuple[str, ...]
    hit: Hit | None
    streams: dict[str, StreamDegeneracy] = field(default_factory=dict)

    @property
    def is_weak(self) -> bool:
        return bool(self.classes) or self.hit is not None

    def as_record(self) -> dict[str, object]:
        return {
            "key": str(self.key),
            "class": ";".join(self.classes) or "-",
            "hit_step": "-" if self.hit is None else self.hit.step,
            "s1_const": _fmt_const(self.streams["s1"]),
            "s2_const": _fmt_const(self.streams["s2"]),
            "s3_const": _fmt_const(self.streams["s3"]),
        }


def _fmt_const(d: StreamDegeneracy) -> str:
    if d.constant is not None:
        return str(d.constant)
    return f"no(longest run {d.longest_run} of {d.run_value})"


def _first_hit(key: SecretKey, M: int, N: int, horizon: int) -> Hit | None:
    """Walk the derivation and report the first state on a (pre-)fixed point.

    Step 0 is the key itself; steps ``1..MN`` are compound steps, after which
    f0 and f1 continue on their own for the shift streams.
    """
    x, y = key.x0, key.y0
    if x in X_SPECIAL:
        return Hit(0, "x", x, X_SPECIAL[x])
    if y in Y_SPECIAL:
        return Hit(0, "y", y, Y_SPECIAL[y])
    n = M * N
    for step in range(1, n + 1):
        if x + y < 0:
            s = x * x
            x = (8.0 * s - 8.0) * s + 1.0
            if x in X_SPECIAL:
                return Hit(step, "x", x, X_SPECIAL[x])
        else:
            y = y * (4.0 * y * y - 3.0)
            if y in Y_SPECIAL:
                return Hit(step, "y", y, Y_SPECIAL[y])
    # Past the compound part both maps run on independently (S2 and S3 and,
    # for longer horizons, beyond).
    for step in range(n + 1, horizon - min(M, N) + 1):
        s = x * x
        x = (8.0 * s - 8.0) * s + 1.0
        if x in X_SPECIAL:
            return Hit(step, "x", x, X_SPECIAL[x])
        y = y * (4.0 * y * y - 3.0)
        if y in Y_SPECIAL:
            return Hit(step, "y", y, Y_SPECIAL[y])
    return None


def detect_weak_key(key: SecretKey, M: int, N: int, horizon: int | None = None) -> WeakKeyReport:
    """Classify ``key`` against the listed weak classes and scan its trajectory.

    ``horizon`` defaults to ``MN + M + N``, one full keystream derivation.
    """
    full = M * N + M + N
    if horizon is None:
        horizon = full
    if horizon < full:
        raise ValueError(f"horizon {horizon} shorter than one derivation ({full})")
    classes = tuple(c.name for c in WEAK_KEY_CLASSES if c.members(key.x0, key.y0))
    ks = derive_keystreams(key, M, N)
    streams = {"s1": _degeneracy(ks.s1), "s2": _degeneracy(ks.s2), "s3": _degeneracy(ks.s3)}
    return WeakKeyReport(key, classes, _first_hit(key, M, N, horizon), streams)


class EquivalenceResult(NamedTuple):
    equivalent: bool
    first_diff: tuple[str, int] | None


def check_equivalent_keys(ka: SecretKey, kb: SecretKey, M: int, N: int) -> EquivalenceResult:
    """Keystream equality, which implies identical ciphertexts for every plaintext."""
    a = derive_keystreams(ka, M, N)
    b = derive_keystreams(kb, M, N)
    for name in ("s1", "s2", "s3"):
        diff = np.flatnonzero(getattr(a, name) != getattr(b, name))
        if len(diff):
            return EquivalenceResult(False, (name, int(diff[0])))
    return EquivalenceResult(True, None)


@dataclass(frozen=True)
class SensitivityReport:
    flipped: tuple[int, int, int]
    differing: tuple[tuple[int, int, int], ...]

    @property
    def hamming(self) -> int:
        return len(self.differing)


def measure_sensitivity(
    key: SecretKey | Keystreams, plain, bit: tuple[int, int, int]
) -> SensitivityReport:
    """Flip plaintext bit ``bit = (i, j, b)`` and list the ciphertext bits that change.

    ``b`` is the intra-byte index, 0 for the least significant bit.
    """
    p = as_image(plain)
    M, N = p.shape
    i, j, b = bit
    if not (0 <= i < M and 0 <= j < N and 0 <= b < 8):
        raise ValueError(f"bit position {bit} outside a {M}x{N} image")
    ks = key if isinstance(key, Keystreams) else derive_keystreams(key, M, N)
    q = p.copy()
    q[i, j] ^= np.uint8(1 << b)
    diff = encrypt(p, ks) ^ encrypt(q, ks)
    bits = np.unpackbits(diff[..., None], axis=-1, bitorder="little")
    where = np.argwhere(bits)
    return SensitivityReport((i, j, b), tuple(tuple(int(v) for v in w) for w in where))


def format_record(record: dict[str, object]) -> str:
    return " ".join(f"{k}={v}" for k, v in record.items())


def random_nonweak_keys(count: int, seed: int, M: int = 256, N: int = 256) -> list[SecretKey]:
    """Uniform keys on [-1, 1]^2, rejecting any the weak-key detector flags."""
    rng = np.random.default_rng(seed)
    keys: list[SecretKey] = []
    while len(keys) < count:
        key = SecretKey(*rng.uniform(-1.0, 1.0, 2))
        if not detect_weak_key(key, M, N).is_weak:
            keys.append(key)
    return keys
