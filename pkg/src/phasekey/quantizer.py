"""Uniform phase quantization, Gray coding and index-agreement probability."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .channel import TWO_PI, wrap_phase
from .streams import as_generator


def _check_q(q: int, power_of_two: bool = False):
    if q < 1 or int(q) != q:
        raise ValueError(f"q must be a positive integer, got {q}")
    if power_of_two and (q < 2 or q & (q - 1)):
        raise ValueError(f"q must be a power of two >= 2 for bit encoding, got {q}")


def bits_per_symbol(q: int) -> int:
    _check_q(q, power_of_two=True)
    return q.bit_length() - 1


def quantize_phase(theta, q: int):
    """Sector index ``k`` in ``1..q`` with ``theta`` in ``[2pi(k-1)/q, 2pi k/q)``.

    Accepts scalars or arrays; values must already lie in ``[0, 2*pi)``.
    """
    _check_q(q)
    t = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t >= TWO_PI):
        raise ValueError("theta must lie in [0, 2*pi)")
    k = np.floor(t * (q / TWO_PI)).astype(np.int64)
    # rounding can push values just below 2*pi onto q
    k = np.minimum(k, q - 1) + 1
    return int(k) if k.ndim == 0 else k


def gray_encode(k, q: int) -> np.ndarray:
    """Reflected-binary Gray code of ``k-1`` as bits, MSB first.

    Scalar ``k`` gives shape ``(log2 q,)``; an array gives ``(..., log2 q)``.
    """
    n = bits_per_symbol(q)
    k = np.asarray(k, dtype=np.int64)
    if np.any(k < 1) or np.any(k > q):
        raise ValueError(f"index out of range 1..{q}")
    g = (k - 1) ^ ((k - 1) >> 1)
    shifts = np.arange(n - 1, -1, -1)
    return ((g[..., None] >> shifts) & 1).astype(np.uint8)


def gray_decode(bits, q: int):
    n = bits_per_symbol(q)
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] != n:
        raise ValueError(f"expected {n} bits per symbol, got {bits.shape[-1]}")
    g = (bits << np.arange(n - 1, -1, -1)).sum(axis=-1)
    b = g.copy()
    shift = 1
    while shift < n:
        b ^= b >> shift
        shift <<= 1
    k = b + 1
    return int(k) if k.ndim == 0 else k


def phases_to_bits(theta, q: int) -> np.ndarray:
    """Quantize and Gray-encode a sequence of phases into one flat bit vector."""
    return gray_encode(quantize_phase(wrap_phase(np.asarray(theta, dtype=float)), q), q).reshape(-1)


def sector_probability(theta, sigma: float, q: int, sector: int = 0):
    """Probability that ``N(theta, sigma^2)`` lands in the given sector (no wrap)."""
    lo = TWO_PI * sector / q
    hi = TWO_PI * (sector + 1) / q
    return ndtr((hi - theta) / sigma) - ndtr((lo - theta) / sigma)


def p_qia(sigma_theta2: float, q: int) -> float:
    """Average probability that two independent estimates share the true sector.

    Dominant-term form: the sector-average of ``P_i(theta)**2``, where
    ``P_i`` is the Gaussian mass of the true sector. Neighbour-sector
    agreements are ignored, so this underestimates true agreement slightly.
    """
    if not sigma_theta2 > 0:
        raise ValueError("sigma_theta2 must be positive")
    _check_q(q)
    if q == 1:
        return 1.0
    sigma = math.sqrt(sigma_theta2)
    width = TWO_PI / q
    f = lambda t: sector_probability(t, sigma, q) ** 2
    # most of the loss sits within a few sigma of each edge
    pts = [p for p in (4 * sigma, width - 4 * sigma) if 0 < p < width]
    val, _ = integrate.quad(f, 0.0, width, points=sorted(pts) or None, epsabs=1e-11, epsrel=1e-10, limit=500)
    return float(min(max(val / width, 0.0), 1.0))


def p_qia_monte_carlo(sigma_theta2: float, q: int, trials: int, rng=None, true_sector_only: bool = False):
    """Monte Carlo agreement probability over all sectors with wraparound.

    With ``true_sector_only`` an agreement only counts when both estimates
    land in the sector of the true phase, which is exactly the quantity
    :func:`p_qia` integrates. Returns ``(estimate, standard_error)``.
    """
    _check_q(q)
    rng = as_generator(rng)
    sigma = math.sqrt(sigma_theta2)
    hits = 0
    done = 0
    chunk = 1_000_000
    while done < trials:
        n = min(chunk, trials - done)
        theta = rng.uniform(0.0, TWO_PI, n)
        a = quantize_phase(wrap_phase(theta + sigma * rng.standard_normal(n)), q)
        b = quantize_phase(wrap_phase(theta + sigma * rng.standard_normal(n)), q)
        same = a == b
        if true_sector_only:
            same &= a == quantize_phase(theta, q)
        hits += int(np.count_nonzero(same))
        done += n
    p = hits / trials
    return p, math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)


def predicted_ber(p_qia_value: float, q: int, gray: bool = True) -> float:
    """Bit-error probability implied by an agreement probability.

    Without Gray coding a disagreement is counted as a full error; with it,
    a disagreement is assumed to hit an adjacent sector and flip one of
    ``log2 q`` bits.
    """
    if not 0.0 <= p_qia_value <= 1.0:
        raise ValueError("p_qia must be a probability")
    miss = 1.0 - p_qia_value
    return miss / bits_per_symbol(q) if gray else miss
