"""Block-fading narrowband Rayleigh channel and AWGN.

The channel is constant over one coherence interval and redrawn
independently for the next. In-phase and quadrature gains are i.i.d.
zero-mean Gaussians with variance ``sigma_h2`` so the amplitude is Rayleigh
and the phase is uniform on ``[0, 2*pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import as_generator

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ChannelParams:
    sigma_h2: float = 0.5
    coherence_time_s: float = 14e-3

    def __post_init__(self):
        if not (self.sigma_h2 > 0 and math.isfinite(self.sigma_h2)):
            raise ValueError(f"sigma_h2 must be positive, got {self.sigma_h2}")
        if not (self.coherence_time_s > 0 and math.isfinite(self.coherence_time_s)):
            raise ValueError(f"coherence_time_s must be positive, got {self.coherence_time_s}")


@dataclass(frozen=True)
class NoiseParams:
    sigma2: float = 0.0

    def __post_init__(self):
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


def wrap_phase(x):
    """Reduce angles into ``[0, 2*pi)``."""
    y = np.mod(x, TWO_PI)
    # np.mod can round up to exactly 2*pi for tiny negative inputs
    y = np.where(y >= TWO_PI, 0.0, y)
    return float(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence-interval draw of a narrowband channel."""

    in_phase: float
    quadrature: float

    @property
    def amplitude(self) -> float:
        return math.hypot(self.in_phase, self.quadrature)

    @property
    def phase(self) -> float:
        return wrap_phase(math.atan2(self.quadrature, self.in_phase))

    @classmethod
    def from_polar(cls, amplitude: float, phase: float) -> "ChannelRealization":
        return cls(amplitude * math.cos(phase), amplitude * math.sin(phase))


def sample_channels(rng, params: ChannelParams, size) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized draw of ``size`` channels; returns ``(amplitude, phase)`` arrays."""
    rng = as_generator(rng)
    iq = rng.normal(0.0, math.sqrt(params.sigma_h2), size=(2,) + tuple(np.atleast_1d(size)))
    amp = np.hypot(iq[0], iq[1])
    phase = wrap_phase(np.arctan2(iq[1], iq[0]))
    return amp, phase


def sample_channel(rng, params: ChannelParams) -> ChannelRealization:
    rng = as_generator(rng)
    i, q = rng.normal(0.0, math.sqrt(params.sigma_h2), size=2)
    return ChannelRealization(float(i), float(q))


def reciprocal_pair(realization: ChannelRealization):
    """Forward and backward views of one TDD link within a coherence interval."""
    # frozen dataclass: sharing the instance is equivalent to copying it
    return realization, ChannelRealization(realization.in_phase, realization.quadrature)


def eavesdropper_channel(rng, params: ChannelParams) -> ChannelRealization:
    """Draw an eavesdropper link.

    Independence from the legitimate links comes from the caller passing a
    dedicated stream (see :func:`phasekey.streams.substream`).
    """
    return sample_channel(rng, params)


def awgn(length: int, sigma2: float, rng) -> np.ndarray:
    if length < 1:
        raise ValueError("awgn length must be >= 1")
    NoiseParams(sigma2)
    rng = as_generator(rng)
    if sigma2 == 0:
        return np.zeros(int(length))
    return rng.normal(0.0, math.sqrt(sigma2), size=int(length))
