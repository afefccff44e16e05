import math

import numpy as np
import pytest

from phasekey.channel import TWO_PI
from phasekey.quantizer import phases_to_bits
from phasekey.randomness import (SequenceTooShort, approximate_entropy, block_frequency, cumulative_sums, dft_test,
                                 monobit, reports_to_csv, run_all, runs, serial)
from phasekey.streams import substream

# 100 bits of the binary expansion of e used by the SP 800-22 worked examples
E100 = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000"


def bits(s):
    return np.array([int(c) for c in s], dtype=np.int8)


@pytest.mark.parametrize("fn, seq, kw, expected", [
    (monobit, "1011010101", {}, (0.527089,)),
    (monobit, E100, {}, (0.109599,)),
    (block_frequency, "0110011010", {"M": 3}, (0.801252,)),
    (block_frequency, E100, {"M": 10}, (0.706438,)),
    (runs, "1001101011", {}, (0.147232,)),
    (runs, E100, {}, (0.500798,)),
    (cumulative_sums, "1011010111", {}, (0.411658,)),
    (cumulative_sums, E100, {}, (0.219194,)),
    (cumulative_sums, E100, {"direction": "reverse"}, (0.114866,)),
    (approximate_entropy, "0100110101", {"m": 3}, (0.261961,)),
    (approximate_entropy, E100, {"m": 2}, (0.235301,)),
    (serial, "0011011101", {"m": 3}, (0.808792, 0.670320)),
])
def test_worked_examples(fn, seq, kw, expected):
    rep = fn(bits(seq), strict=False, **kw)
    assert rep.p_values == pytest.approx(expected, abs=2e-6)


def _dft_oracle(b):
    """The same statistic from an explicit O(n^2) DFT sum."""
    n = b.size
    x = 2.0 * b - 1.0
    m = np.arange(n)
    mags = [abs(np.sum(x * np.exp(-2j * math.pi * k * m / n))) for k in range(n // 2)]
    t = math.sqrt(math.log(20) * n)
    d = (sum(v < t for v in mags) - 0.95 * n / 2) / math.sqrt(n * 0.95 * 0.05 / 4)
    return math.erfc(abs(d) / math.sqrt(2))


@pytest.mark.parametrize("seq", ["1001010011", E100])
def test_dft_matches_explicit_sum(seq):
    b = bits(seq)
    assert dft_test(b, strict=False).p_values[0] == pytest.approx(_dft_oracle(b), abs=1e-12)


def test_dft_hand_value():
    # |S| = [0, 2, 4.47, 2, 4.47] all below T = 5.47, so N1 = 5 and d = 2.176
    assert dft_test(bits("1001010011"), strict=False).p_values[0] == pytest.approx(0.468160, abs=1e-6)


def test_all_zeros_and_alternation():
    zeros = np.zeros(10_000, dtype=np.int8)
    assert monobit(zeros).p_values[0] < 1e-10 and not monobit(zeros).passed
    alt = np.tile([0, 1], 5000)
    assert monobit(alt).passed
    assert runs(alt).p_values[0] < 1e-10


def test_length_and_alphabet_errors():
    with pytest.raises(SequenceTooShort, match="100"):
        monobit(np.ones(99, dtype=np.int8))
    with pytest.raises(SequenceTooShort):
        serial(np.ones(200, dtype=np.int8), m=6)
    with pytest.raises(ValueError):
        runs(np.full(200, 2))


def test_palindrome_cusum_symmetry():
    half = substream(1, "pal").integers(0, 2, 500)
    pal = np.concatenate([half, half[::-1]])
    assert cumulative_sums(pal).p_values == cumulative_sums(pal, "reverse").p_values


def test_deterministic():
    b = substream(2, "det").integers(0, 2, 4000)
    assert run_all(b) == run_all(b.copy())


def test_false_rejection_rate_on_random_streams():
    passes = {}
    for i in range(200):
        b = substream(3, "seq", i).integers(0, 2, 10_000)
        for rep in run_all(b):
            passes[rep.name] = passes.get(rep.name, 0) + rep.passed
    assert len(passes) == 8
    for name, count in passes.items():
        assert count / 200 >= 0.97, name


def test_quantized_uniform_phases_pass():
    rows = []
    for i in range(10):
        theta = substream(4, "phase", i).uniform(0, TWO_PI, 1250)
        rows.append(run_all(phases_to_bits(theta, 256)))
    for j in range(8):
        ps = [r[j].p_values[0] for r in rows]
        assert sum(r[j].passed for r in rows) >= 9
        assert 0.1 < np.mean(ps) < 0.9


def test_csv_layout(tmp_path):
    b = substream(5, "csv").integers(0, 2, 1000)
    text = reports_to_csv(run_all(b), tmp_path / "r.csv")
    lines = text.strip().split("\n")
    assert lines[0] == "test,p_values,pass"
    assert len(lines) == 9
    assert lines[-1].startswith("serial,") and lines[-1].count(";") == 1
    assert (tmp_path / "r.csv").read_text() == text
