"""FIPS 140-2 (Change Notice 1) single-block tests and a nine-test SP 800-22 battery.

Bit sequences are 1-D ``uint8`` arrays of 0/1 values.  Keystream bits come from
the XOR stream S1, least significant bit of each byte first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erfc, gammaincc
from scipy.stats import norm

from .chaos import SecretKey
from .cipher import derive_keystreams

__all__ = [
    "ALPHA",
    "FIPS_BLOCK",
    "FipsReport",
    "LengthError",
    "NIST_TESTS",
    "NistBatteryReport",
    "approximate_entropy",
    "as_bits",
    "binary_matrix_rank",
    "block_frequency",
    "bytes_to_bits",
    "cumulative_sums",
    "fips_battery",
    "fips_long_run",
    "fips_monobit",
    "fips_poker",
    "fips_runs",
    "frequency",
    "keystream_bits",
    "nist_battery",
    "non_overlapping_template",
    "rank_probabilities",
    "runs",
    "serial",
    "spectral",
]

FIPS_BLOCK = 20000
ALPHA = 0.01

MONOBIT_INTERVAL = (9725, 10275)
RUNS_INTERVALS = {
    1: (2315, 2685),
    2: (1114, 1386),
    3: (527, 723),
    4: (240, 384),
    5: (103, 209),
    6: (103, 209),  # r >= 6
}
LONG_RUN = 26
POKER_INTERVAL = (2.16, 46.17)


class LengthError(ValueError):
    """The bit sequence is too short for the requested test."""


def as_bits(bits) -> np.ndarray:
    a = np.asarray(bits, dtype=np.uint8).ravel()
    if a.size == 0:
        raise LengthError("empty bit sequence")
    if a.max() > 1:
        raise ValueError("bit sequence may only contain 0 and 1")
    return a


def bytes_to_bits(data, bitorder: str = "little") -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder=bitorder)


def keystream_bits(key: SecretKey, M: int, N: int, bitorder: str = "little") -> np.ndarray:
    """The ``8·M·N`` bits of S1, each byte expanded in ``bitorder``."""
    return np.unpackbits(derive_keystreams(key, M, N).s1, bitorder=bitorder)


def _block(bits) -> np.ndarray:
    b = as_bits(bits)
    if b.size < FIPS_BLOCK:
        raise LengthError(f"FIPS tests need {FIPS_BLOCK} bits, got {b.size}")
    return b[:FIPS_BLOCK]


def _run_lengths(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lengths and values of the maximal runs of ``b``."""
    edges = np.flatnonzero(np.diff(b)) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [b.size])))
    return lengths, b[starts]


# -- FIPS 140-2 ---------------------------------------------------------------


@dataclass(frozen=True)
class FipsResult:
    name: str
    statistic: object
    interval: tuple[float, float]
    passed: bool


def fips_monobit(bits) -> FipsResult:
    ones = int(_block(bits).sum())
    lo, hi = MONOBIT_INTERVAL
    return FipsResult("monobit", ones, MONOBIT_INTERVAL, lo <= ones <= hi)


def fips_runs(bits) -> list[FipsResult]:
    """One result per bucket r=1..5 and r>=6; statistic is ``(zero_runs, one_runs)``."""
    lengths, values = _run_lengths(_block(bits))
    capped = np.minimum(lengths, 6)
    out = []
    for r, (lo, hi) in RUNS_INTERVALS.items():
        counts = tuple(int(np.sum((capped == r) & (values == v))) for v in (0, 1))
        ok = all(lo <= c <= hi for c in counts)
        out.append(FipsResult(f"runs r={r}" if r < 6 else "runs r>=6", counts, (lo, hi), ok))
    return out


def fips_long_run(bits) -> FipsResult:
    """Statistic is the number of runs of length >= 26 of each bit value; any such run fails."""
    lengths, values = _run_lengths(_block(bits))
    long = lengths >= LONG_RUN
    counts = tuple(int(np.sum(long & (values == v))) for v in (0, 1))
    return FipsResult("long run", counts, (0, 0), counts == (0, 0))


def max_run(bits) -> int:
    lengths, _ = _run_lengths(_block(bits))
    return int(lengths.max())


def fips_poker(bits) -> FipsResult:
    b = _block(bits).reshape(5000, 4)
    nibbles = b @ np.array([8, 4, 2, 1])
    counts = np.bincount(nibbles, minlength=16)
    x = 16.0 / 5000.0 * float(np.sum(counts.astype(np.float64) ** 2)) - 5000.0
    lo, hi = POKER_INTERVAL
    return FipsResult("poker", x, POKER_INTERVAL, lo < x < hi)


@dataclass(frozen=True)
class FipsReport:
    results: list[FipsResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> FipsResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def format(self) -> str:
        lines = []
        for r in self.results:
            stat = f"{r.statistic:.2f}" if isinstance(r.statistic, float) else str(r.statistic)
            lo, hi = r.interval
            lines.append(
                f"test_name={r.name!r} interval={lo}-{hi} statistic={stat} "
                f"verdict={'pass' if r.passed else 'fail'}"
            )
        return "\n".join(lines)


def fips_battery(bits) -> FipsReport:
    return FipsReport([fips_monobit(bits), *fips_runs(bits), fips_long_run(bits), fips_poker(bits)])


# -- SP 800-22 ----------------------------------------------------------------


def _need(b: np.ndarray, n: int, test: str) -> None:
    if b.size < n:
        raise LengthError(f"{test} needs at least {n} bits, got {b.size}")


def frequency(bits) -> float:
    b = as_bits(bits)
    s = abs(int(2 * int(b.sum()) - b.size)) / math.sqrt(b.size)
    return float(erfc(s / math.sqrt(2)))


def block_frequency(bits, m: int = 100) -> float:
    b = as_bits(bits)
    _need(b, m, "block frequency")
    nblocks = b.size // m
    pi = b[: nblocks * m].reshape(nblocks, m).mean(axis=1)
    chi2 = 4.0 * m * float(np.sum((pi - 0.5) ** 2))
    return float(gammaincc(nblocks / 2.0, chi2 / 2.0))


def cumulative_sums(bits, forward: bool = True) -> float:
    b = as_bits(bits)
    n = b.size
    x = 2 * b.astype(np.int64) - 1
    if not forward:
        x = x[::-1]
    z = int(np.max(np.abs(np.cumsum(x))))
    sq = math.sqrt(n)
    k = np.arange(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1)
    s1 = np.sum(norm.cdf((4 * k + 1) * z / sq) - norm.cdf((4 * k - 1) * z / sq))
    k = np.arange(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1)
    s2 = np.sum(norm.cdf((4 * k + 3) * z / sq) - norm.cdf((4 * k + 1) * z / sq))
    return float(min(1.0, max(0.0, 1.0 - s1 + s2)))


def runs(bits) -> float:
    b = as_bits(bits)
    n = b.size
    pi = float(b.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # Frequency prerequisite failed; the runs test is not applicable.
        return 0.0
    v = 1 + int(np.count_nonzero(np.diff(b)))
    num = abs(v - 2.0 * n * pi * (1 - pi))
    return float(erfc(num / (2.0 * math.sqrt(2.0 * n) * pi * (1 - pi))))


def rank_probabilities(rows: int, cols: int) -> tuple[float, float, float]:
    """Probabilities of full rank, rank deficient by one, and anything lower."""

    def p(r: int) -> float:
        prod = 1.0
        for i in range(r):
            prod *= (1 - 2.0 ** (i - rows)) * (1 - 2.0 ** (i - cols)) / (1 - 2.0 ** (i - r))
        return 2.0 ** (r * (rows + cols - r) - rows * cols) * prod

    full = min(rows, cols)
    p0, p1 = p(full), p(full - 1)
    return p0, p1, 1.0 - p0 - p1


def _gf2_ranks(mats: np.ndarray) -> np.ndarray:
    """Ranks over GF(2) of a stack of binary matrices, shape ``(K, rows, cols)``."""
    K, rows, cols = mats.shape
    a = mats.astype(bool).copy()
    rank = np.zeros(K, dtype=np.int64)
    ar = np.arange(K)
    for c in range(cols):
        # Pivot search among rows not yet used.
        row_idx = np.arange(rows)[None, :]
        candidates = a[:, :, c] & (row_idx >= rank[:, None])
        has = candidates.any(axis=1)
        piv = np.argmax(candidates, axis=1)
        sel = ar[has]
        if sel.size == 0:
            continue
        r = rank[sel]
        p = piv[sel]
        prow = a[sel, p, :].copy()
        a[sel, p, :] = a[sel, r, :]
        a[sel, r, :] = prow
        mask = a[sel, :, c].copy()
        mask[np.arange(sel.size), r] = False
        a[sel] ^= mask[:, :, None] & prow[:, None, :]
        rank[sel] += 1
    return rank


def binary_matrix_rank(bits, rows: int = 32, cols: int = 32) -> float:
    b = as_bits(bits)
    size = rows * cols
    count = b.size // size
    if count < 1:
        raise LengthError(f"rank test needs at least {size} bits, got {b.size}")
    mats = b[: count * size].reshape(count, rows, cols)
    ranks = _gf2_ranks(mats)
    full = min(rows, cols)
    observed = np.array(
        [np.sum(ranks == full), np.sum(ranks == full - 1), np.sum(ranks < full - 1)], dtype=float
    )
    expected = np.array(rank_probabilities(rows, cols)) * count
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    return float(math.exp(-chi2 / 2.0))


def _template_count(block: np.ndarray, template: np.ndarray) -> int:
    m = template.size
    windows = np.lib.stride_tricks.sliding_window_view(block, m)
    hits = np.flatnonzero(np.all(windows == template, axis=1))
    count, nxt = 0, 0
    for h in hits:
        if h >= nxt:
            count += 1
            nxt = h + m
    return count


def non_overlapping_template(bits, template: str = "101001100", blocks: int = 8) -> float:
    b = as_bits(bits)
    t = np.array([int(c) for c in template], dtype=np.uint8)
    m = t.size
    M = b.size // blocks
    _need(b, blocks * m, "non-overlapping template")
    w = np.array([_template_count(b[k * M : (k + 1) * M], t) for k in range(blocks)], dtype=float)
    mu = (M - m + 1) / 2.0**m
    var = M * (1.0 / 2.0**m - (2.0 * m - 1) / 2.0 ** (2 * m))
    chi2 = float(np.sum((w - mu) ** 2) / var)
    return float(gammaincc(blocks / 2.0, chi2 / 2.0))


def _pattern_counts(b: np.ndarray, m: int) -> np.ndarray:
    """Frequencies of every overlapping m-bit pattern in the cyclically extended sequence."""
    if m == 0:
        return np.array([b.size])
    ext = np.concatenate((b, b[: m - 1])).astype(np.int64)
    codes = np.zeros(b.size, dtype=np.int64)
    for k in range(m):
        codes = (codes << 1) | ext[k : k + b.size]
    return np.bincount(codes, minlength=1 << m)


def _psi2(b: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    counts = _pattern_counts(b, m).astype(np.float64)
    return float((2.0**m) / b.size * np.sum(counts**2) - b.size)


def serial(bits, m: int = 16) -> tuple[float, float]:
    b = as_bits(bits)
    _need(b, m, "serial")
    psi_m, psi_m1, psi_m2 = _psi2(b, m), _psi2(b, m - 1), _psi2(b, m - 2)
    d1 = psi_m - psi_m1
    d2 = psi_m - 2.0 * psi_m1 + psi_m2
    return float(gammaincc(2.0 ** (m - 2), d1 / 2.0)), float(gammaincc(2.0 ** (m - 3), d2 / 2.0))


def approximate_entropy(bits, m: int = 10) -> float:
    b = as_bits(bits)
    n = b.size
    _need(b, m + 1, "approximate entropy")

    def phi(k: int) -> float:
        c = _pattern_counts(b, k).astype(np.float64) / n
        c = c[c > 0]
        return float(np.sum(c * np.log(c)))

    apen = phi(m) - phi(m + 1)
    chi2 = 2.0 * n * (math.log(2) - apen)
    return float(gammaincc(2.0 ** (m - 1), chi2 / 2.0))


def spectral(bits) -> float:
    b = as_bits(bits)
    n = b.size
    x = 2.0 * b - 1.0
    mod = np.abs(np.fft.fft(x))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = float(np.count_nonzero(mod < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return float(erfc(abs(d) / math.sqrt(2)))


# Battery with the parameters of the chaotic-keystream evaluation.
NIST_TESTS: dict[str, Callable[[np.ndarray], float | tuple[float, ...]]] = {
    "Frequency": frequency,
    "Block Frequency (m=100)": lambda b: block_frequency(b, 100),
    "Cumulative Sums-Forward": lambda b: cumulative_sums(b, forward=True),
    "Runs": runs,
    "Rank": lambda b: binary_matrix_rank(b, 32, 32),
    "Non-overlapping Template (m=9, B=101001100)": lambda b: non_overlapping_template(b, "101001100", 8),
    "Serial (m=16)": lambda b: serial(b, 16),
    "Approximate Entropy (m=10)": lambda b: approximate_entropy(b, 10),
    "FFT": spectral,
}


@dataclass(frozen=True)
class NistRecord:
    sequence_id: int
    test_name: str
    p_values: tuple[float, ...]
    passed: bool
    error: str | None = None


@dataclass
class NistBatteryReport:
    records: list[NistRecord] = field(default_factory=list)
    sequences: int = 0

    @property
    def pass_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in NIST_TESTS}
        for r in self.records:
            counts[r.test_name] += r.passed
        return counts

    def format(self) -> str:
        lines = []
        for r in self.records:
            ps = ",".join(f"{p:.6f}" for p in r.p_values) or "-"
            verdict = "error" if r.error else ("pass" if r.passed else "fail")
            extra = f" error={r.error!r}" if r.error else ""
            lines.append(
                f"sequence_id={r.sequence_id} test_name={r.test_name!r} "
                f"alpha={ALPHA} p_values={ps} verdict={verdict}{extra}"
            )
        lines.append(f"# summary over {self.sequences} sequences")
        for name, c in self.pass_counts.items():
            lines.append(f"summary test_name={name!r} passed={c}/{self.sequences}")
        return "\n".join(lines)


def nist_battery(sequences: Iterable[np.ndarray], tests: Sequence[str] | None = None) -> NistBatteryReport:
    """Run the battery on every sequence; a sequence passes a test iff all its p-values >= 0.01."""
    names = list(tests) if tests is not None else list(NIST_TESTS)
    report = NistBatteryReport()
    for sid, seq in enumerate(sequences):
        b = as_bits(seq)
        for name in names:
            try:
                res = NIST_TESTS[name](b)
            except LengthError as exc:
                report.records.append(NistRecord(sid, name, (), False, str(exc)))
                continue
            ps = tuple(res) if isinstance(res, tuple) else (res,)
            report.records.append(NistRecord(sid, name, ps, all(p >= ALPHA for p in ps)))
        report.sequences += 1
    return report
