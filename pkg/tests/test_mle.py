import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasekey.beacon import BeaconSpec, SampleVector, received_tones, snr_to_sigma2
from phasekey.channel import ChannelRealization, TWO_PI
from phasekey.mle import (EstimationError, crb_frequency_variance, crb_phase_variance, default_dft_len,
                          estimate, estimate_batch, fine_frequency_search, rough_frequency_search,
                          rough_search_batch, wrapped_error)
from phasekey.streams import substream


def _fisher_crb(amp, w, phi, sigma2, n):
    """Inverse Fisher information for (A, w, phi) of A*cos(w*m + phi) in white noise."""
    m = np.arange(n)
    arg = w * m + phi
    jac = np.stack([np.cos(arg), -amp * m * np.sin(arg), -amp * np.sin(arg)], axis=1)
    return np.linalg.inv(jac.T @ jac / sigma2)


@pytest.mark.parametrize("n", [64, 500, 4000])
def test_crb_formulas_match_numeric_fisher(n):
    amp, sigma2 = 1.3, 0.02
    snr = amp**2 / (2 * sigma2)
    inv = _fisher_crb(amp, TWO_PI / 3, 0.4, sigma2, n)
    report = crb_phase_variance(snr, n)
    # the real tone's double-frequency terms add an O(1/N) correction
    tol = max(1e-2, 4.0 / n)
    assert inv[2, 2] == pytest.approx(report.var_theta_exact, rel=tol)
    assert inv[1, 1] == pytest.approx(crb_frequency_variance(snr, n), rel=tol)
    assert report.var_theta_lower_bound == pytest.approx(4 / (snr * n))
    assert report.var_theta_exact == pytest.approx(report.var_theta_lower_bound, rel=3.0 / n)


def test_crb_validation_and_scaling():
    with pytest.raises(ValueError):
        crb_phase_variance(0.0, 100)
    with pytest.raises(ValueError):
        crb_phase_variance(1.0, 8)
    a = crb_phase_variance(10.0, 1000).var_theta_lower_bound
    assert crb_phase_variance(10.0, 2000).var_theta_lower_bound == pytest.approx(a / 2)
    assert crb_phase_variance(20.0, 1000).var_theta_lower_bound == pytest.approx(a / 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 6.283), st.floats(0.2, 3.0), st.integers(64, 3000))
def test_noiseless_recovery(theta, alpha, n):
    spec = BeaconSpec.from_samples(n)
    row = received_tones(spec, alpha, theta, 0.0, None)[0]
    est = estimate(SampleVector(row, spec.sample_rate_hz))
    assert est.converged
    assert abs(wrapped_error(est.theta_hat, theta)) < 1e-6
    assert est.omega_hat == pytest.approx(spec.omega_c, rel=1e-9)


def test_start_time_referencing():
    spec = BeaconSpec.from_samples(900)
    t0 = 3.21e-3
    row = received_tones(spec, 1.0, 2.0, 0.0, None, t0=t0)[0]
    est = estimate(SampleVector(row, spec.sample_rate_hz, t0), reference_omega=spec.omega_c)
    assert abs(wrapped_error(est.theta_hat, 2.0)) < 1e-8


def test_rough_search_within_one_bin():
    spec = BeaconSpec.from_samples(20000)
    sigma2 = snr_to_sigma2(spec, 0.5, 10 ** 2.5)
    dft_len = default_dft_len(spec.n_samples)
    true_bin = spec.carrier_freq_hz / spec.sample_rate_hz * dft_len
    hits = total = 0
    for c in range(20):
        rng = substream(5, "rough", c)
        rows = received_tones(spec, 1.0, rng.uniform(0, TWO_PI, 500), sigma2, rng)
        k = rough_search_batch(rows, dft_len)
        hits += int(np.sum(np.abs(k - true_bin) <= 1))
        total += k.size
    assert hits / total >= 0.999


def test_dc_and_zero_inputs_raise():
    with pytest.raises(EstimationError):
        estimate(SampleVector(np.ones(256), 2.7e6))
    with pytest.raises(EstimationError):
        rough_search_batch(np.zeros((1, 256)), 1024)
    # lenient mode only refuses all-zero rows
    rough_search_batch(np.ones((1, 256)), 1024, strict=False)
    with pytest.raises(EstimationError):
        rough_search_batch(np.zeros((1, 256)), 1024, strict=False)
    with pytest.raises(ValueError):
        rough_search_batch(np.ones((1, 256)), 300)


def test_scalar_api_steps():
    spec = BeaconSpec.from_samples(1000)
    obs = SampleVector(received_tones(spec, 1.0, 1.0, 1e-3, substream(1, "s"))[0], spec.sample_rate_hz)
    k, omega_l = rough_frequency_search(obs)
    assert abs(omega_l - spec.omega_c) <= TWO_PI * spec.sample_rate_hz / default_dft_len(1000)
    omega, conv = fine_frequency_search(obs, k)
    assert conv and abs(omega - spec.omega_c) < abs(omega_l - spec.omega_c) + 1e-9


def _errors(n, snr, trials, seed):
    spec = BeaconSpec.from_samples(n, amplitude_a=1.0)
    sigma2 = 1.0 / (2 * snr)
    rng = substream(seed, "mc")
    theta = rng.uniform(0, TWO_PI, trials)
    rows = received_tones(spec, 1.0, theta, sigma2, rng)
    omega, theta_hat, _ = estimate_batch(rows, spec.sample_rate_hz)
    return omega - spec.omega_c, wrapped_error(theta_hat, theta)


def test_unbiased_and_efficient():
    snr, n, trials = 100.0, 1000, 4000
    dw, dtheta = _errors(n, snr, trials, 3)
    crb = crb_phase_variance(snr, n).var_theta_exact
    se = math.sqrt(crb / trials)
    assert abs(dtheta.mean()) < 4 * se
    assert 0.9 < dtheta.var() / crb < 1.2
    assert dw.var() < 2 * crb_frequency_variance(snr, n, 2.7e6)


def test_phase_variance_halves_with_double_samples():
    v1 = _errors(500, 100.0, 4000, 4)[1].var()
    v2 = _errors(1000, 100.0, 4000, 5)[1].var()
    # F-test style tolerance for two sample variances of 4000 draws each
    assert 0.4 < v2 / v1 < 0.6
