"""Single-tone beacons as seen by a receiver after a narrowband fading channel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import TWO_PI, ChannelRealization
from .streams import as_generator

MIN_SAMPLES = 16


@dataclass(frozen=True)
class BeaconSpec:
    """Transmit amplitude, carrier, observation window and sampling clock.

    Transmit power is ``amplitude_a**2 / 2``.
    """

    amplitude_a: float = math.sqrt(2.0)
    carrier_freq_hz: float = 900e3
    duration_s: float = 7.5e-3
    sample_rate_hz: float = 2.7e6
    start_time_s: float = 0.0

    def __post_init__(self):
        for name in ("amplitude_a", "carrier_freq_hz", "duration_s", "sample_rate_hz", "start_time_s"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.amplitude_a <= 0:
            raise ValueError("amplitude_a must be positive")
        if self.carrier_freq_hz <= 0 or self.duration_s <= 0:
            raise ValueError("carrier frequency and duration must be positive")
        if not self.sample_rate_hz > 2 * self.carrier_freq_hz:
            raise ValueError("sample_rate_hz must exceed twice the carrier frequency")
        if self.n_samples < MIN_SAMPLES:
            raise ValueError(f"beacon yields {self.n_samples} samples; at least {MIN_SAMPLES} required")

    @property
    def power(self) -> float:
        return 0.5 * self.amplitude_a**2

    @property
    def n_samples(self) -> int:
        # guard against 7.5e-3 * 2.7e6 = 20249.999...
        return int(math.floor(self.duration_s * self.sample_rate_hz + 1e-9))

    @property
    def omega_c(self) -> float:
        return TWO_PI * self.carrier_freq_hz

    @classmethod
    def from_samples(cls, n_samples: int, **kw) -> "BeaconSpec":
        """Spec whose window holds exactly ``n_samples`` samples."""
        fs = kw.get("sample_rate_hz", cls.sample_rate_hz)
        return cls(duration_s=n_samples / fs, **kw)


@dataclass(frozen=True)
class SampleVector:
    samples: np.ndarray = field(repr=False)
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("SampleVector needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(s)):
            raise ValueError("SampleVector samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


def carrier_offset(freq_hz: float, t0: float) -> float:
    """``2*pi*freq*t0`` reduced mod 2*pi without losing precision for large t0."""
    cycles = freq_hz * t0
    return TWO_PI * (cycles - math.floor(cycles))


def received_tones(spec: BeaconSpec, amplitude, phase, sigma2: float, rng, t0=None) -> np.ndarray:
    """Batch of received steady-state beacons, one row per (amplitude, phase).

    ``amplitude`` is the channel gain alpha; the row is
    ``a*alpha*cos(w_c*(t0 + m*Ts) + theta) + n[m]``. ``t0`` may be a scalar
    or one start time per row, and so may ``sigma2``.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(~np.isfinite(sigma2)) or np.any(sigma2 < 0):
        raise ValueError(f"sigma2 must be finite and >= 0, got {sigma2}")
    amplitude = np.atleast_1d(np.asarray(amplitude, dtype=float))
    phase = np.atleast_1d(np.asarray(phase, dtype=float))
    amplitude, phase = np.broadcast_arrays(amplitude, phase)
    t0 = spec.start_time_s if t0 is None else t0
    cycles = spec.carrier_freq_hz * np.asarray(t0, dtype=float)
    offset = TWO_PI * (cycles - np.floor(cycles))
    n = spec.n_samples
    step = spec.omega_c / spec.sample_rate_hz
    m = np.arange(n)
    arg = step * m + (offset + phase)[:, None]
    out = (spec.amplitude_a * amplitude)[:, None] * np.cos(arg)
    if np.any(sigma2 > 0):
        noise = as_generator(rng).standard_normal(out.shape)
        out += noise * np.sqrt(sigma2).reshape(-1, 1) if sigma2.ndim else noise * math.sqrt(sigma2)
    return out


def received_tone(spec: BeaconSpec, channel: ChannelRealization, sigma2: float, rng=None) -> SampleVector:
    rows = received_tones(spec, channel.amplitude, channel.phase, sigma2, rng)
    return SampleVector(rows[0], spec.sample_rate_hz, spec.start_time_s)


def snr_from_db(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def snr_to_sigma2(spec: BeaconSpec, sigma_h2: float, snr: float) -> float:
    """Per-sample noise variance giving ``SNR = 2*sigma_h2*P / sigma2`` (linear SNR)."""
    if not snr > 0:
        raise ValueError(f"SNR must be positive, got {snr}")
    if math.isinf(snr):
        return 0.0
    return 2.0 * sigma_h2 * spec.power / snr
