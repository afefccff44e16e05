"""Maximum-likelihood frequency and phase estimation for a noisy real tone.

Three steps: a zero-padded FFT peak search, a secant refinement of the
peak of the continuous transform ``|R(w)|``, and the closed-form phase

    theta = atan2(-sum r[m] sin(w m), sum r[m] cos(w m)).

All work is done in normalized frequency (rad/sample) on 2-D arrays, one
observation per row; the scalar functions wrap the batch ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beacon import SampleVector, carrier_offset
from .channel import TWO_PI, wrap_phase

MAX_SECANT_ITER = 50
SECANT_TOL_BINS = 1e-10


class EstimationError(ValueError):
    """Degenerate observation: no usable spectral peak or phase."""


@dataclass(frozen=True)
class PhaseEstimate:
    omega_hat: float
    theta_hat: float
    n_samples: int
    converged: bool = True


@dataclass(frozen=True)
class CrbReport:
    """Phase-error variance bounds for a tone at ``snr_linear`` over ``n_samples``.

    ``var_theta_lower_bound`` is the large-N form ``4/(SNR*N)``;
    ``var_theta_exact`` is ``2(2N-1)/(N(N+1)*SNR)``, the bound for the
    phase referenced to the first sample with frequency unknown.
    """

    var_theta_lower_bound: float
    var_theta_exact: float
    snr_linear: float
    n_samples: int


def default_dft_len(n_samples: int) -> int:
    """Smallest power of two >= 4*n_samples."""
    return 1 << int(math.ceil(math.log2(4 * n_samples)))


def _check_dft_len(dft_len: int, n: int):
    if dft_len <= n or dft_len & (dft_len - 1):
        raise ValueError(f"dft_len must be a power of two greater than {n}, got {dft_len}")


def rough_search_batch(rows: np.ndarray, dft_len: int, strict: bool = True) -> np.ndarray:
    """Peak bin of the zero-padded DFT of each row, restricted to (0, fs/2).

    Bins inside the main lobe of DC or Nyquist are excluded; a row whose
    strongest component sits at DC (or which is identically zero) raises
    :class:`EstimationError`. With ``strict=False`` such rows (deep fades
    inside a large batch) just take the best interior bin.
    """
    rows = np.atleast_2d(rows)
    n = rows.shape[1]
    _check_dft_len(dft_len, n)
    mag = np.abs(np.fft.rfft(rows, dft_len, axis=1))
    lobe = int(math.ceil(dft_len / n))
    half = dft_len // 2
    if lobe >= half - lobe:
        raise EstimationError("observation too short to separate a tone from DC")
    overall = np.argmax(mag, axis=1)
    peak = mag.max(axis=1)
    bad = (peak <= 0) | (overall < lobe) | (overall > half - lobe)
    if not strict:
        bad = peak <= 0
    if np.any(bad):
        raise EstimationError(f"no spectral peak away from DC/Nyquist in {int(bad.sum())} observation(s)")
    return lobe + np.argmax(mag[:, lobe:half - lobe + 1], axis=1)


def _gram(w: np.ndarray, mc: np.ndarray):
    """Gram entries of (cos, sin) over the window and their w-derivatives.

    ``mc`` must hold consecutive sample indices. The sums of ``exp(2jwm)``
    and ``m*exp(2jwm)`` have closed (Dirichlet kernel) forms, so the cost
    does not grow with the window.
    """
    n = mc.size
    c0 = float(mc[0]) + 0.5 * (n - 1)  # window centre
    sw, cw = np.sin(w), np.cos(w)
    snw, cnw = np.sin(n * w), np.cos(n * w)
    dk = snw / sw
    ddk = (n * cnw * sw - snw * cw) / (sw * sw)
    rot = np.exp(2j * w * c0)
    s0 = rot * dk
    s1 = rot * (c0 * dk - 0.5j * ddk)
    cc = 0.5 * (n + s0.real)
    ss = 0.5 * (n - s0.real)
    cs = 0.5 * s0.imag
    return cc, ss, cs, -s1.imag, s1.imag, s1.real


def _phasors(w: np.ndarray, m0: float, n: int):
    """``exp(1j*w*(m0 + m))`` for ``m = 0..n-1`` and each row's ``w``.

    Splitting ``m = B*a + b`` needs only ``~2*sqrt(n)`` complex exponentials
    per row; one complex product per sample then rebuilds the grid.
    """
    blk = max(1, int(math.isqrt(n)))
    outer_n = -(-n // blk)
    outer = np.exp(1j * w[:, None] * (m0 + blk * np.arange(outer_n))[None, :])
    inner = np.exp(1j * w[:, None] * np.arange(blk)[None, :])
    return (outer[:, :, None] * inner[:, None, :]).reshape(w.size, -1)[:, :n]


def _objective_and_slope(rows: np.ndarray, mc: np.ndarray, w: np.ndarray, rm: np.ndarray | None = None):
    """Real-tone likelihood ``J(w)`` and ``dJ/dw`` per row.

    ``J`` is the energy of each row's projection onto span{cos(wm), sin(wm)};
    it equals ``2|R(w)|^2/N`` up to the cos/sin cross terms, which vanish only
    asymptotically. Its noiseless maximum sits exactly on the tone.
    """
    ph = _phasors(w, float(mc[0]), mc.size)
    cos_, sin_ = ph.real, ph.imag
    c = np.einsum("ij,ij->i", rows, cos_)
    s = np.einsum("ij,ij->i", rows, sin_)
    if rm is None:
        rm = rows * mc[None, :]
    dc = -np.einsum("ij,ij->i", rm, sin_)
    ds = np.einsum("ij,ij->i", rm, cos_)
    a, b, d, da, db, dd = _gram(w, mc)
    det = a * b - d * d
    num = b * c * c - 2 * d * c * s + a * s * s
    dnum = (db * c * c + 2 * b * c * dc - 2 * dd * c * s - 2 * d * (dc * s + c * ds)
            + da * s * s + 2 * a * s * ds)
    ddet = da * b + a * db - 2 * d * dd
    return num / det, (dnum * det - num * ddet) / det**2


def fine_search_batch(rows: np.ndarray, k_hat: np.ndarray, dft_len: int):
    """Secant iterations on the likelihood slope inside [k_hat-1, k_hat+1] DFT bins.

    Returns ``(w_hat, converged)`` in rad/sample. Non-converged rows keep
    their best iterate (largest |R|).
    """
    rows = np.atleast_2d(rows)
    n = rows.shape[1]
    mc = np.arange(n) - 0.5 * (n - 1)  # J is shift invariant; centring keeps the slope well scaled
    bin_w = TWO_PI / dft_len
    centre = np.asarray(k_hat, dtype=float) * bin_w
    lo, hi = centre - bin_w, centre + bin_w
    tol = SECANT_TOL_BINS * TWO_PI / n

    rm = rows * mc[None, :]
    x0 = centre
    p0, g0 = _objective_and_slope(rows, mc, x0, rm)
    x1 = np.clip(x0 + np.sign(g0) * 0.25 * bin_w, lo, hi)
    p1, g1 = _objective_and_slope(rows, mc, x1, rm)
    best_x = np.where(p1 > p0, x1, x0)
    best_p = np.maximum(p0, p1)
    converged = np.zeros(rows.shape[0], dtype=bool)
    active = np.ones(rows.shape[0], dtype=bool)

    for _ in range(MAX_SECANT_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        dg = g1[idx] - g0[idx]
        flat = dg == 0
        step = np.where(flat, 0.0, -g1[idx] * (x1[idx] - x0[idx]) / np.where(flat, 1.0, dg))
        x2 = np.clip(x1[idx] + step, lo[idx], hi[idx])
        p2, g2 = _objective_and_slope(rows[idx], mc, x2, rm[idx])
        better = p2 > best_p[idx]
        best_x[idx[better]] = x2[better]
        best_p[idx[better]] = p2[better]
        done = (np.abs(x2 - x1[idx]) < tol) | flat
        x0[idx], g0[idx] = x1[idx], g1[idx]
        x1[idx], g1[idx] = x2, g2
        converged[idx[done]] = True
        active[idx[done]] = False
        # a converged secant iterate is the stationary point; prefer it over earlier bests
        best_x[idx[done]] = x2[done]
    return best_x, converged


def local_phase_batch(rows: np.ndarray, w: np.ndarray, gram_correction: bool = True) -> np.ndarray:
    """Phase of each row at its first sample, for tone frequency ``w`` (rad/sample).

    With ``gram_correction=False`` this is the textbook arctangent of the
    correlation sums. The default first solves the 2x2 least-squares system
    for the cos/sin coefficients, which removes the finite-N leakage of the
    negative-frequency image and reduces to the textbook form as N grows.
    """
    rows = np.atleast_2d(rows)
    w = np.asarray(w, dtype=float)
    m = np.arange(rows.shape[1], dtype=float)
    ph = _phasors(w, 0.0, m.size)
    s = np.einsum("ij,ij->i", rows, ph.imag)
    c = np.einsum("ij,ij->i", rows, ph.real)
    if np.any((s == 0) & (c == 0)):
        raise EstimationError("phase undefined: both correlation sums vanish")
    if not gram_correction:
        return np.arctan2(-s, c)
    a, b, d = _gram(w, m)[:3]
    det = a * b - d * d
    # r ~ A cos + B sin with A = amp*cos(theta), B = -amp*sin(theta)
    coef_c = (b * c - d * s) / det
    coef_s = (a * s - d * c) / det
    return np.arctan2(-coef_s, coef_c)


def estimate_batch(rows, sample_rate_hz: float, t0=0.0, dft_len: int | None = None,
                   reference_omega: float | None = None, strict: bool = True):
    """Run the three-step estimator on every row.

    Phases are referred to the common clock by subtracting
    ``reference_omega * t0`` (``t0`` scalar or one value per row); when ``reference_omega`` is None the row's own
    frequency estimate is used. Returns ``(omega_hat [rad/s], theta_hat,
    converged)``.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n = rows.shape[1]
    dft_len = default_dft_len(n) if dft_len is None else dft_len
    k = rough_search_batch(rows, dft_len, strict)
    w, conv = fine_search_batch(rows, k, dft_len)
    theta = local_phase_batch(rows, w)
    omega = w * sample_rate_hz
    t0 = np.asarray(t0, dtype=float)
    if np.any(t0 != 0):
        if reference_omega is None:
            theta = theta - np.mod(omega * t0, TWO_PI)
        else:
            cycles = (reference_omega / TWO_PI) * t0
            theta = theta - TWO_PI * (cycles - np.floor(cycles))
    return omega, wrap_phase(theta), conv


# ---- scalar API ---------------------------------------------------------

def rough_frequency_search(obs: SampleVector, dft_len: int | None = None):
    """Return ``(k_hat, omega_l)`` with ``omega_l`` in rad/s."""
    dft_len = default_dft_len(len(obs)) if dft_len is None else dft_len
    k = int(rough_search_batch(obs.samples[None, :], dft_len)[0])
    return k, TWO_PI * k * obs.sample_rate_hz / dft_len


def fine_frequency_search(obs: SampleVector, k_hat: int, dft_len: int | None = None):
    """Return ``(omega_hat [rad/s], converged)``."""
    dft_len = default_dft_len(len(obs)) if dft_len is None else dft_len
    w, conv = fine_search_batch(obs.samples[None, :], np.array([k_hat]), dft_len)
    return float(w[0] * obs.sample_rate_hz), bool(conv[0])


def estimate_phase(obs: SampleVector, omega_hat: float, reference_omega: float | None = None) -> float:
    if not omega_hat > 0:
        raise ValueError("omega_hat must be positive")
    w = omega_hat / obs.sample_rate_hz
    theta = float(local_phase_batch(obs.samples[None, :], np.array([w]))[0])
    ref = omega_hat if reference_omega is None else reference_omega
    return wrap_phase(theta - carrier_offset(ref / TWO_PI, obs.start_time_s))


def estimate(obs: SampleVector, dft_len: int | None = None, reference_omega: float | None = None) -> PhaseEstimate:
    """Full three-step estimate for one observation."""
    omega, theta, conv = estimate_batch(obs.samples, obs.sample_rate_hz, obs.start_time_s,
                                        dft_len, reference_omega)
    return PhaseEstimate(float(omega[0]), float(theta[0]), len(obs), bool(conv[0]))


def crb_phase_variance(snr_linear: float, n_samples: int) -> CrbReport:
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16")
    n = n_samples
    return CrbReport(
        var_theta_lower_bound=4.0 / (snr_linear * n),
        var_theta_exact=2.0 * (2 * n - 1) / (n * (n + 1) * snr_linear),
        snr_linear=snr_linear,
        n_samples=n,
    )


def crb_frequency_variance(snr_linear: float, n_samples: int, sample_rate_hz: float = 1.0) -> float:
    """Frequency CRB ``12 fs^2 / (SNR N (N^2-1))`` in (rad/s)^2, SNR = A^2/(2 sigma^2)."""
    n = n_samples
    return 12.0 * sample_rate_hz**2 / (snr_linear * n * (n * n - 1))


def wrapped_error(estimate, truth):
    """Phase difference mapped into ``[-pi, pi)``."""
    return np.mod(np.asarray(estimate) - np.asarray(truth) + math.pi, TWO_PI) - math.pi
