"""Subset of the NIST SP 800-22 statistical tests.

Formulas follow SP 800-22 rev. 1a. Each test returns a :class:`TestReport`;
a sequence passes when every p-value exceeds ``ALPHA``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaincc
from scipy.stats import norm

ALPHA = 0.01
MIN_BITS = 100


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    name: str
    p_values: tuple
    n_bits: int

    @property
    def passed(self) -> bool:
        return all(p > ALPHA for p in self.p_values)


class SequenceTooShort(ValueError):
    pass


def _bits(bits, minimum: int, strict: bool) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int8).ravel()
    if np.any((b != 0) & (b != 1)):
        raise ValueError("sequence must contain only 0/1")
    if strict and b.size < minimum:
        raise SequenceTooShort(f"sequence has {b.size} bits; at least {minimum} required")
    if b.size == 0:
        raise SequenceTooShort("empty sequence")
    return b


def _clip(p: float) -> float:
    return float(min(max(p, 0.0), 1.0))


def monobit(bits, strict: bool = True) -> TestReport:
    b = _bits(bits, MIN_BITS, strict)
    s = abs(int(2 * b.sum()) - b.size) / math.sqrt(b.size)
    return TestReport("monobit", (_clip(erfc(s / math.sqrt(2))),), b.size)


def block_frequency(bits, M: int = 128, strict: bool = True) -> TestReport:
    b = _bits(bits, max(MIN_BITS, M), strict)
    nblocks = b.size // M
    if nblocks == 0:
        raise SequenceTooShort(f"need at least one block of {M} bits")
    pi = b[: nblocks * M].reshape(nblocks, M).mean(axis=1)
    chi2 = 4.0 * M * np.sum((pi - 0.5) ** 2)
    return TestReport("block_frequency", (_clip(gammaincc(nblocks / 2.0, chi2 / 2.0)),), b.size)


def runs(bits, strict: bool = True) -> TestReport:
    b = _bits(bits, MIN_BITS, strict)
    n = b.size
    pi = b.mean()
    # frequency prerequisite: the runs statistic is meaningless for a biased sequence
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return TestReport("runs", (0.0,), n)
    v = 1 + int(np.count_nonzero(np.diff(b)))
    p = erfc(abs(v - 2 * n * pi * (1 - pi)) / (2 * math.sqrt(2 * n) * pi * (1 - pi)))
    return TestReport("runs", (_clip(p),), n)


def cumulative_sums(bits, direction: str = "forward", strict: bool = True) -> TestReport:
    b = _bits(bits, MIN_BITS, strict)
    if direction not in ("forward", "reverse"):
        raise ValueError("direction must be 'forward' or 'reverse'")
    x = 2 * b.astype(np.int64) - 1
    if direction == "reverse":
        x = x[::-1]
    n = b.size
    z = int(np.max(np.abs(np.cumsum(x))))
    sq = math.sqrt(n)
    k1 = np.arange(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1)
    k2 = np.arange(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1)
    s1 = np.sum(norm.cdf((4 * k1 + 1) * z / sq) - norm.cdf((4 * k1 - 1) * z / sq))
    s2 = np.sum(norm.cdf((4 * k2 + 3) * z / sq) - norm.cdf((4 * k2 + 1) * z / sq))
    return TestReport(f"cumulative_sums_{direction}", (_clip(1.0 - s1 + s2),), n)


def _pattern_counts(b: np.ndarray, m: int) -> np.ndarray:
    """Overlapping m-bit pattern counts with wraparound."""
    if m == 0:
        return np.array([b.size])
    ext = np.concatenate([b, b[: m - 1]]).astype(np.int64)
    idx = np.zeros(b.size, dtype=np.int64)
    for j in range(m):
        idx = (idx << 1) | ext[j: j + b.size]
    return np.bincount(idx, minlength=1 << m)


def _check_m(n: int, m: int, strict: bool):
    if m < 1:
        raise ValueError("block length m must be >= 1")
    if strict and m > int(math.floor(math.log2(n))) - 2:
        raise SequenceTooShort(f"m={m} needs at least {2 ** (m + 2)} bits")


def approximate_entropy(bits, m: int = 2, strict: bool = True) -> TestReport:
    b = _bits(bits, MIN_BITS, strict)
    n = b.size
    _check_m(n, m, strict)

    def phi(k):
        c = _pattern_counts(b, k) / n
        c = c[c > 0]
        return float(np.sum(c * np.log(c)))

    apen = phi(m) - phi(m + 1)
    chi2 = 2.0 * n * (math.log(2) - apen)
    return TestReport("approximate_entropy", (_clip(gammaincc(2 ** (m - 1), chi2 / 2.0)),), n)


def serial(bits, m: int = 2, strict: bool = True) -> TestReport:
    """Returns two p-values (first and second differences of psi^2)."""
    b = _bits(bits, MIN_BITS, strict)
    n = b.size
    _check_m(n, m, strict)
    if m < 2:
        raise ValueError("serial test needs m >= 2")

    def psi2(k):
        if k <= 0:
            return 0.0
        c = _pattern_counts(b, k).astype(float)
        return (2 ** k / n) * float(np.sum(c * c)) - n

    p_m, p_m1, p_m2 = psi2(m), psi2(m - 1), psi2(m - 2)
    d1 = p_m - p_m1
    d2 = p_m - 2 * p_m1 + p_m2
    return TestReport("serial", (_clip(gammaincc(2 ** (m - 2), d1 / 2.0)),
                                 _clip(gammaincc(2 ** (m - 3), d2 / 2.0))), n)


def dft_test(bits, strict: bool = True) -> TestReport:
    b = _bits(bits, MIN_BITS, strict)
    n = b.size
    x = 2.0 * b - 1.0
    mag = np.abs(np.fft.fft(x))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(mag < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return TestReport("dft", (_clip(erfc(abs(d) / math.sqrt(2))),), n)


def run_all(bits, block_size: int = 128, m: int = 2) -> list[TestReport]:
    """The eight table rows: DFT, monobit, runs, ApEn, cusum fwd/rev, block frequency, serial."""
    return [
        dft_test(bits),
        monobit(bits),
        runs(bits),
        approximate_entropy(bits, m),
        cumulative_sums(bits, "forward"),
        cumulative_sums(bits, "reverse"),
        block_frequency(bits, block_size),
        serial(bits, m),
    ]


def reports_to_csv(reports, path=None) -> str:
    """CSV with columns ``test, p_value(s), pass``; p-values joined by ``;``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["test", "p_values", "pass"])
    for r in reports:
        w.writerow([r.name, ";".join(f"{p:.6f}" for p in r.p_values), int(r.passed)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
