"""Chebyshev-type chaotic maps and the compound sequence generator.

Two maps on [-1, 1] drive the cipher:

    f0(x) = 8x^4 - 8x^2 + 1      (degree-4 Chebyshev polynomial)
    f1(y) = 4y^3 - 3y            (degree-3 Chebyshev polynomial)

The compound generator keeps one state per map and, at every step, advances
exactly one of them depending on the sign of ``x + y``.  Both polynomials are
evaluated in Horner form over binary64 (see ``iterate_f0``); this ordering is
what makes published keystream statistics reproducible bit for bit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

__all__ = [
    "Branch",
    "ChaosState",
    "CompoundSample",
    "DivergenceResult",
    "DomainError",
    "InvalidKeyError",
    "SecretKey",
    "compound_sequence",
    "compound_step",
    "divergence_demo",
    "eval_compound_F",
    "iterate_f0",
    "iterate_f1",
    "quantize_byte",
    "quantize_col_shift",
    "quantize_row_shift",
]

KEY_DIGITS = 14
_DECIMAL = re.compile(r"^[+-]?(\d+)(?:\.(\d*))?$")


class DomainError(ValueError):
    """A value fell outside [-1, 1] or a size was not positive."""


class InvalidKeyError(ValueError):
    """Malformed or out-of-range secret key."""


def _check_unit(v: float, name: str = "value") -> float:
    v = float(v)
    if not (-1.0 <= v <= 1.0):
        raise DomainError(f"{name}={v!r} outside [-1, 1]")
    return v


@dataclass(frozen=True)
class SecretKey:
    """Initial states ``(x0, y0)`` of the two maps."""

    x0: float
    y0: float

    def __post_init__(self) -> None:
        for name in ("x0", "y0"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
                raise InvalidKeyError(f"{name} must be a real number, got {v!r}")
            if not (-1.0 <= v <= 1.0):
                raise InvalidKeyError(f"{name}={v!r} outside [-1, 1]")
            object.__setattr__(self, name, float(v))

    @classmethod
    def parse(cls, x0: str, y0: str) -> SecretKey:
        """Build a key from two decimal strings with at most 14 fractional digits.

        Parsing is locale independent; each string is converted once to the
        nearest binary64 value.
        """
        return cls(_parse_component(x0, "x0"), _parse_component(y0, "y0"))

    def __str__(self) -> str:
        return f"({self.x0!r}, {self.y0!r})"


def _parse_component(text: str, name: str) -> float:
    m = _DECIMAL.match(text.strip())
    if m is None:
        raise InvalidKeyError(f"{name}: {text!r} is not a plain decimal number")
    frac = m.group(2) or ""
    if len(frac) > KEY_DIGITS:
        raise InvalidKeyError(f"{name}: {text!r} has more than {KEY_DIGITS} fractional digits")
    v = float(text)
    if not (-1.0 <= v <= 1.0):
        raise InvalidKeyError(f"{name}={text} outside [-1, 1]")
    return v


class Branch(Enum):
    F0 = 0
    F1 = 1


@dataclass(frozen=True)
class ChaosState:
    x: float
    y: float
    k0: int = 0
    k1: int = 0

    @classmethod
    def from_key(cls, key: SecretKey) -> ChaosState:
        return cls(key.x0, key.y0, 0, 0)

    def __post_init__(self) -> None:
        _check_unit(self.x, "x")
        _check_unit(self.y, "y")
        if self.k0 < 0 or self.k1 < 0:
            raise DomainError("branch counters must be non-negative")


class CompoundSample(NamedTuple):
    z: float
    branch: Branch


def iterate_f0(x: float) -> float:
    """Return ``8x^4 - 8x^2 + 1`` evaluated as ``(8s - 8)s + 1`` with ``s = x*x``.

    The Horner ordering never leaves [-1, 1]: ``(8s - 8)s`` is bounded below by
    the representable -2 and above by 0, and rounding is monotone.
    """
    _check_unit(x, "x")
    s = x * x
    return (8.0 * s - 8.0) * s + 1.0


def iterate_f1(y: float) -> float:
    """Return ``4y^3 - 3y`` evaluated as ``y * (4y^2 - 3)``."""
    _check_unit(y, "y")
    return y * (4.0 * y * y - 3.0)


def compound_step(state: ChaosState) -> tuple[ChaosState, CompoundSample]:
    # x + y == 0 goes to f1.
    if state.x + state.y < 0:
        x = iterate_f0(state.x)
        return ChaosState(x, state.y, state.k0 + 1, state.k1), CompoundSample(x, Branch.F0)
    y = iterate_f1(state.y)
    return ChaosState(state.x, y, state.k0, state.k1 + 1), CompoundSample(y, Branch.F1)


def compound_sequence(x: float, y: float, n: int) -> tuple[list[float], float, float, int]:
    """Run ``n`` compound steps from ``(x, y)``.

    Returns the samples, the final ``x`` and ``y``, and ``k0`` (the number of
    f0 steps; ``k1 = n - k0``).  This is the hot path of keystream derivation,
    so the maps are inlined here; ``compound_step`` is the reference form.
    """
    out = [0.0] * n
    k0 = 0
    for k in range(n):
        if x + y < 0:
            s = x * x
            x = (8.0 * s - 8.0) * s + 1.0
            out[k] = x
            k0 += 1
        else:
            y = y * (4.0 * y * y - 3.0)
            out[k] = y
    return out, x, y, k0


def quantize_byte(z: float) -> int:
    _check_unit(z, "z")
    # 1 + z rounds to 2.0 for z within half an ulp of 1, not only at z == 1.
    return min(int((1.0 + z) / 2.0 * 256), 255)


def _quantize_shift(v: float, size: int, name: str) -> int:
    _check_unit(v, name)
    if size < 1:
        raise DomainError(f"size must be positive, got {size}")
    return min(int((1.0 + v) / 2.0 * size), size - 1)


def quantize_row_shift(x: float, M: int) -> int:
    """Map an f0 sample to a horizontal shift in ``[0, M-1]``."""
    return _quantize_shift(x, M, "x")


def quantize_col_shift(y: float, N: int) -> int:
    """Map an f1 sample to a vertical shift in ``[0, N-1]``."""
    return _quantize_shift(y, N, "y")


def eval_compound_F(x: float) -> float:
    """Single-variable piecewise map: f0 on [-1, 0), f1 on [0, 1]."""
    _check_unit(x, "x")
    return iterate_f0(x) if x < 0 else iterate_f1(x)


class DivergenceResult(NamedTuple):
    compound: list[float]
    piecewise: list[float]
    first_diff: int | None


def divergence_demo(key: SecretKey, n: int) -> DivergenceResult:
    """Compare the two-state compound stream against iterating ``F`` from ``x0``.

    ``first_diff`` is the first 0-based sample index where the streams
    disagree, or ``None`` when all ``n`` samples coincide.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    compound, _, _, _ = compound_sequence(key.x0, key.y0, n)
    piecewise = []
    x = key.x0
    for _ in range(n):
        x = eval_compound_F(x)
        piecewise.append(x)
    first = next((k for k, (a, b) in enumerate(zip(compound, piecewise)) if a != b), None)
    return DivergenceResult(compound, piecewise, first)
