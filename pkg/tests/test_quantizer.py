import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm
from hypothesis import given, strategies as st

from phasekey.channel import TWO_PI
from phasekey.quantizer import (bits_per_symbol, gray_decode, gray_encode, p_qia, p_qia_monte_carlo,
                                phases_to_bits, predicted_ber, quantize_phase)
from phasekey.streams import substream


def test_quantize_examples():
    assert quantize_phase(0.0, 4) == 1
    assert quantize_phase(3 * math.pi / 2, 4) == 4
    assert quantize_phase(TWO_PI - 1e-12, 256) == 256
    assert quantize_phase(math.pi / 2, 4) == 2


@pytest.mark.parametrize("bad", [-1e-9, TWO_PI, math.nan, 7.0])
def test_quantize_rejects_unreduced(bad):
    with pytest.raises(ValueError):
        quantize_phase(bad, 8)


@given(st.floats(0.0, TWO_PI, exclude_max=True), st.sampled_from([1, 2, 3, 4, 16, 100, 256]))
def test_partition(theta, q):
    k = quantize_phase(theta, q)
    assert 1 <= k <= q
    # sector membership, allowing for float rounding at the edges
    assert TWO_PI * (k - 1) / q <= theta + 1e-12
    assert theta < TWO_PI * k / q + 1e-12


def test_gray_examples():
    got = ["".join(map(str, gray_encode(k, 4))) for k in range(1, 5)]
    assert got == ["00", "01", "11", "10"]


@pytest.mark.parametrize("q", [2, 8, 256, 1024])
def test_gray_cyclic_adjacency_and_inverse(q):
    codes = gray_encode(np.arange(1, q + 1), q)
    dist = np.sum(codes != np.roll(codes, -1, axis=0), axis=1)
    assert np.all(dist == 1)
    np.testing.assert_array_equal(gray_decode(codes, q), np.arange(1, q + 1))
    assert codes.shape == (q, bits_per_symbol(q))


def test_gray_errors():
    with pytest.raises(ValueError):
        gray_encode(0, 4)
    with pytest.raises(ValueError):
        gray_encode(5, 4)
    with pytest.raises(ValueError):
        gray_encode(1, 12)
    with pytest.raises(ValueError):
        gray_decode([0, 1, 1], 4)


@given(st.lists(st.floats(-20.0, 20.0), min_size=1, max_size=20))
def test_phases_to_bits_length(thetas):
    assert phases_to_bits(thetas, 16).size == 4 * len(thetas)


def test_p_qia_trivial_limits():
    assert p_qia(0.5, 1) == 1.0
    assert p_qia(1e-14, 16) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        p_qia(0.0, 4)
    assert 0 < p_qia(10.0, 16) < 0.2


def test_p_qia_against_true_sector_monte_carlo():
    est, se = p_qia_monte_carlo(1e-4, 16, 10_000_000, substream(11, "qia"), true_sector_only=True)
    assert abs(est - p_qia(1e-4, 16)) < 3 * se


def test_all_sector_agreement_not_below_dominant_term():
    for var, q in [(1e-4, 16), (0.05, 8), (0.3, 4)]:
        est, se = p_qia_monte_carlo(var, q, 1_000_000, substream(12, "all", q))
        assert est + 3 * se >= p_qia(var, q)


def test_p_qia_monotone_grid():
    variances = np.geomspace(1e-5, 1.0, 12)
    qs = [2, 4, 8, 16, 32, 64]
    grid = np.array([[p_qia(v, q) for q in qs] for v in variances])
    assert np.all(np.diff(grid, axis=0) <= 1e-12)
    assert np.all(np.diff(grid, axis=1) <= 1e-12)


def test_p_qia_small_sigma_asymptote():
    # each sector edge costs sigma * int_0^inf (1 - Phi(u)^2) du of agreement mass
    sigma, q = 1e-3, 16
    width = TWO_PI / q
    edge, _ = integrate.quad(lambda x: 1 - norm.cdf(x) ** 2, 0, 40)
    assert 1 - p_qia(sigma**2, q) == pytest.approx(2 * sigma * edge / width, rel=1e-4)


def test_predicted_ber():
    assert predicted_ber(1.0, 16) == 0.0
    assert predicted_ber(0.9, 16) == pytest.approx(0.025)
    assert predicted_ber(0.9, 16, gray=False) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        predicted_ber(1.2, 4)


def test_gray_adjacent_disagreement_is_one_bit():
    rng = substream(3, "adj")
    q = 64
    k = rng.integers(1, q + 1, 1000)
    nb = np.where(rng.random(1000) < 0.5, k % q + 1, (k - 2) % q + 1)
    errs = np.sum(gray_encode(k, q) != gray_encode(nb, q), axis=1)
    assert np.all(errs == 1)
