"""Closed-form key-rate bounds (mutual information and CRB based)."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .quantizer import bits_per_symbol, p_qia


@dataclass(frozen=True)
class BoundConfig:
    """Physical parameters for the bounds.

    ``n_samples`` is the per-node sample budget of the no-relay case
    (``T_c * f_s / 2`` when the coherence time is fully used); with relays
    each node gets ``2*n_samples/(relays+2)``. ``guard_samples`` is the
    per-slot switching/propagation guard expressed in samples; it is taken
    off every node's budget and makes the relay sweep peak at finite N.
    """

    sigma_h2: float = 0.5
    sigma2: float = 10 ** -2.5
    power_P: float = 1.0
    n_samples: float = 20250
    coherence_time_s: float = 14e-3
    relays: int = 0
    q: int = 16
    guard_samples: float = 0.0

    def __post_init__(self):
        if min(self.sigma_h2, self.coherence_time_s, self.n_samples) <= 0:
            raise ValueError("sigma_h2, coherence time and n_samples must be positive")
        if self.sigma2 < 0 or self.power_P < 0:
            raise ValueError("sigma2 and power_P must be non-negative")
        if self.relays < 0:
            raise ValueError("relays must be >= 0")
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if not 0 <= self.guard_samples < self.n_samples:
            raise ValueError("guard_samples must lie in [0, n_samples)")

    @property
    def snr(self) -> float:
        """Average received SNR ``2*sigma_h2*P/sigma2``."""
        if self.sigma2 == 0:
            return math.inf
        return 2.0 * self.sigma_h2 * self.power_P / self.sigma2

    @property
    def link_samples(self) -> float:
        return self.n_samples - self.guard_samples

    @property
    def coop_samples(self) -> float:
        """Per-node samples with relays; 0 once the guard eats the whole slot."""
        return max(2.0 * self.n_samples / (self.relays + 2) - self.guard_samples, 0.0)

    @classmethod
    def from_snr(cls, snr_linear: float, **kw) -> "BoundConfig":
        """Config whose noise variance yields the given average SNR."""
        sigma_h2 = kw.get("sigma_h2", cls.sigma_h2)
        power = kw.get("power_P", cls.power_P)
        return cls(sigma2=2.0 * sigma_h2 * power / snr_linear, **kw)


@dataclass(frozen=True)
class BoundReport:
    r_mi: float
    r_mi_coop: float
    r_crb: float
    r_crb_coop: float
    p_qia: float
    p_qia_coop: float
    coop_gain: float
    crb_variance: float


def mutual_information(sigma_h2, sigma2, power_P, n_samples) -> float:
    """``ln2 * log2(1 + sigma_h^4 N^2 P^2 / (sigma^4 + 2 sigma^2 sigma_h^2 N P))``."""
    num = sigma_h2**2 * n_samples**2 * power_P**2
    den = sigma2**2 + 2.0 * sigma2 * sigma_h2 * n_samples * power_P
    if num == 0:
        return 0.0
    if den == 0:
        return math.inf
    # ln2 * log2(1 + x) == ln(1 + x); log1p keeps precision for small x
    return math.log1p(num / den)


def rate_mi(cfg: BoundConfig) -> float:
    return mutual_information(cfg.sigma_h2, cfg.sigma2, cfg.power_P, cfg.link_samples) / cfg.coherence_time_s


def rate_mi_coop(cfg: BoundConfig) -> float:
    info = mutual_information(cfg.sigma_h2, cfg.sigma2, cfg.power_P, cfg.coop_samples)
    return (cfg.relays + 1) * info / cfg.coherence_time_s


def _crb_var(snr: float, n_samples: float) -> float:
    """Large-N phase CRB ``4/(SNR*N)``; ``n_samples`` may be fractional here."""
    if n_samples <= 0:
        return math.inf
    if math.isinf(snr):
        return 0.0
    return 4.0 / (snr * n_samples)


def _p_qia_at(var: float, q: int) -> float:
    if var == 0:
        return 1.0
    return 0.0 if math.isinf(var) else p_qia(var, q)



def rate_crb(cfg: BoundConfig) -> float:
    var = _crb_var(cfg.snr, cfg.link_samples)
    return _p_qia_at(var, cfg.q) * bits_per_symbol(cfg.q) / cfg.coherence_time_s


def rate_crb_coop(cfg: BoundConfig) -> float:
    var = _crb_var(cfg.snr, cfg.coop_samples)
    return (cfg.relays + 1) * _p_qia_at(var, cfg.q) * bits_per_symbol(cfg.q) / cfg.coherence_time_s


def gain_ratio(cfg: BoundConfig) -> float:
    """``R_co^MI / R_k^MI`` at the given configuration."""
    base = rate_mi(cfg)
    return rate_mi_coop(cfg) / base if base > 0 else math.nan


def coop_gain(cfg: BoundConfig, limit: str = "power", start: float | None = None,
              stop: float | None = None, points: int = 13):
    """Extrapolated limit of the cooperative gain as P or N_s grows.

    Both informations grow like ``ln(param)`` for large ``param``, so the
    ratio behaves as ``(A*L + B)/(L + C)`` with ``L = ln(param)`` and creeps
    towards its limit ``A`` far too slowly to read off directly. ``A, B, C``
    are fitted by linear least squares (``ratio*L = A*L + B - C*ratio``) on
    the last five sweep points and ``A`` is returned.

    Returns ``(limit_estimate, params, ratios)``.
    """
    if limit == "power":
        field_name = "power_P"
        start, stop = start or 1e3, stop or 1e9
    elif limit == "samples":
        field_name = "n_samples"
        start, stop = start or 1e4, stop or 1e8
    else:
        raise ValueError("limit must be 'power' or 'samples'")
    params = np.geomspace(start, stop, points)
    ratios = np.array([gain_ratio(replace(cfg, **{field_name: float(p)})) for p in params])
    if cfg.relays == 0:
        return 1.0, params, ratios
    lg, r = np.log(params[-5:]), ratios[-5:]
    design = np.column_stack([lg, np.ones_like(lg), -r])
    (a, _, _), *_ = np.linalg.lstsq(design, r * lg, rcond=None)
    return float(a), params, ratios


def optimal_q(cfg: BoundConfig, q_range) -> int:
    """Power-of-two ``q`` maximizing the cooperative CRB rate."""
    qs = sorted(set(int(q) for q in q_range))
    if not qs:
        raise ValueError("empty q range")
    rates = [rate_crb_coop(replace(cfg, q=q)) for q in qs]
    return qs[int(np.argmax(rates))]


def bound_report(cfg: BoundConfig) -> BoundReport:
    var = _crb_var(cfg.snr, cfg.link_samples)
    var_co = _crb_var(cfg.snr, cfg.coop_samples)
    return BoundReport(
        r_mi=rate_mi(cfg),
        r_mi_coop=rate_mi_coop(cfg),
        r_crb=rate_crb(cfg),
        r_crb_coop=rate_crb_coop(cfg),
        p_qia=_p_qia_at(var, cfg.q),
        p_qia_coop=_p_qia_at(var_co, cfg.q),
        coop_gain=gain_ratio(cfg),
        crb_variance=var,
    )
