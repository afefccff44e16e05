"""Experiment runner: parameter sweeps, Monte Carlo trials and CSV output.

Simulations run at desk scale (every frequency x1e-3, every duration x1e3),
which leaves the sample count per beacon and the SNR unchanged. Rates are
reported in bits per second of the full-scale coherence time.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .beacon import BeaconSpec, received_tones, snr_from_db, snr_to_sigma2
from .bounds import BoundConfig, bound_report, rate_crb
from .mle import crb_phase_variance, estimate_batch, wrapped_error
from .protocol import (SessionConfig, accumulate_shares, assemble_final_key, eavesdropper_leakage,
                       recover_components, relay_publish, run_session, simulate_rounds)
from .quantizer import bits_per_symbol, gray_encode, p_qia, p_qia_monte_carlo, predicted_ber, quantize_phase
from .randomness import run_all
from .reconciliation import privacy_amplify, reconcile, secure_output_length
from .streams import derive_seed, substream

EXPERIMENTS = ("bounds_vs_To", "bounds_vs_N", "rate_vs_q", "ber_vs_q", "ber_vs_To",
               "rate_vs_N_sim", "nist_table", "e2e_keygen", "eve_leakage")
SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PaperConstants:
    """Full-scale physical setup."""

    carrier_freq_hz: float = 900e6
    sample_rate_hz: float = 2.7e9
    speed_mps: float = 10.0
    observation_s: float = 7.5e-6
    coherence_time_s: float = 14e-3
    delay_spread_s: float = 1.2e-6
    max_delay_s: float = 33.3e-9

    @property
    def doppler_hz(self) -> float:
        return self.speed_mps * self.carrier_freq_hz / SPEED_OF_LIGHT

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.observation_s * self.sample_rate_hz + 1e-9))


@dataclass(frozen=True)
class DeskScale:
    factor: float
    carrier_freq_hz: float
    sample_rate_hz: float
    n_samples: int
    coherence_time_s: float
    guard_time_s: float
    paper: PaperConstants

    @property
    def observation_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def beacon(self, n_samples: int | None = None) -> BeaconSpec:
        return BeaconSpec.from_samples(n_samples or self.n_samples, carrier_freq_hz=self.carrier_freq_hz,
                                       sample_rate_hz=self.sample_rate_hz)

    def session(self, n_samples: int | None = None, **kw) -> SessionConfig:
        return SessionConfig(beacon=self.beacon(n_samples), coherence_time_s=self.coherence_time_s,
                             guard_time_s=self.guard_time_s, **kw)


def scale_config(paper: PaperConstants | None = None, max_samples: int = 100_000,
                 factor: float = 1e-3) -> DeskScale:
    """Slow everything down by ``factor`` so a beacon fits a desk budget.

    ``f_s/f_c``, the per-beacon sample count and the SNR are unchanged; a
    beacon longer than ``max_samples`` is truncated to the budget.
    """
    paper = paper or PaperConstants()
    if max_samples < 16:
        raise ValueError(f"a budget of {max_samples} samples is below the 16-sample minimum")
    if not 0 < factor <= 1:
        raise ValueError("factor must lie in (0, 1]")
    n = min(paper.n_samples, int(max_samples))
    return DeskScale(factor, paper.carrier_freq_hz * factor, paper.sample_rate_hz * factor, n,
                     paper.coherence_time_s / factor,
                     (paper.delay_spread_s + paper.max_delay_s) / factor, paper)


# ---- configuration -------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    trials: int = 1000
    seed: int = 0
    out: str = "results"
    snr_db: tuple = (25.0,)
    to_us: tuple = (7.5,)
    n_samples: tuple = ()  # overrides to_us when given
    relays: tuple = (0,)
    q: tuple = (16,)
    sim_q_max: int = 64
    key_bits: int = 256
    sequences: int = 10
    seq_bits: int = 10_000
    amplitude_mode: str = "rayleigh"
    eve_mode: str = "independent"
    sigma_h2: float = 0.5
    max_samples: int = 100_000
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in ("snr_db", "relays", "q"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"grid {name} is empty")
        if not self.n_samples and not self.to_us:
            raise ValueError("grid needs to_us or n_samples")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def text(self) -> str:
        """Canonical key=value form (what gets hashed into the manifest)."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={','.join(map(str, v)) if isinstance(v, tuple) else v}")
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()


_ELEMENT = {"snr_db": float, "to_us": float, "n_samples": int, "relays": int, "q": int}

DEFAULTS = {
    "bounds_vs_To": dict(snr_db=(15.0, 20.0, 25.0), to_us=tuple(float(t) for t in range(1, 11))),
    "bounds_vs_N": dict(snr_db=(-20.0, -10.0, 0.0), relays=(0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000,
                                                          3000, 4000, 5000, 6000, 8000, 10000, 11000)),
    "rate_vs_q": dict(q=tuple(2 ** k for k in range(1, 17)), trials=2000),
    "ber_vs_q": dict(q=(4, 8, 16, 32, 64, 128, 256), n_samples=(192,), trials=100_000,
                     amplitude_mode="normalized"),
    "ber_vs_To": dict(q=(16, 64), to_us=(1.0, 2.0, 5.0, 10.0), trials=2000, amplitude_mode="normalized"),
    "rate_vs_N_sim": dict(relays=tuple(range(1, 9)), trials=50),
    "nist_table": dict(q=(256,), relays=(1,), n_samples=(192,)),
    "e2e_keygen": dict(relays=(1,), trials=20),
    "eve_leakage": dict(q=(8,), relays=(1,), n_samples=(96,), trials=10_000),
}


def default_config(experiment: str, **kw) -> ExperimentConfig:
    if experiment not in DEFAULTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    return ExperimentConfig(experiment=experiment, **{**DEFAULTS[experiment], **kw})


def _parse_value(f: dataclasses.Field, text: str):
    text = text.strip()
    if f.name in _ELEMENT:
        cast = _ELEMENT[f.name]
        items = [s for s in (p.strip() for p in text.split(",")) if s]
        return tuple(cast(float(s)) if cast is int else cast(s) for s in items)
    if f.type in ("int", int):
        return int(text)
    if f.type in ("float", float):
        return float(text)
    return text


def apply_settings(cfg: ExperimentConfig, pairs) -> ExperimentConfig:
    """Apply ``(key, value_text)`` pairs; unknown keys are rejected."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    updates = {}
    for key, value in pairs:
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        if key == "experiment" and value.strip() != cfg.experiment:
            raise ValueError(f"config is for {value.strip()!r}, not {cfg.experiment!r}")
        updates[key] = _parse_value(fields[key], value)
    return dataclasses.replace(cfg, **updates)


def parse_pairs(lines) -> list[tuple[str, str]]:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = []
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key=value, got {raw.strip()!r}")
        k, v = line.split("=", 1)
        out.append((k.strip(), v))
    return out


def load_config(experiment: str, path=None, overrides=()) -> ExperimentConfig:
    cfg = default_config(experiment)
    if path is not None:
        cfg = apply_settings(cfg, parse_pairs(Path(path).read_text().splitlines()))
    return apply_settings(cfg, parse_pairs(overrides))


# ---- results -----------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    params: dict
    metric: str
    value: float
    stderr: float = 0.0
    trials: int = 0


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def rows_to_csv(rows: list[ResultRow]) -> str:
    if not rows:
        raise ValueError("no result rows")
    params = list(rows[0].params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(params + ["metric", "value", "stderr", "trials"])
    for r in rows:
        w.writerow([_fmt(r.params[p]) for p in params] + [r.metric, _fmt(r.value), _fmt(r.stderr), r.trials])
    return buf.getvalue()


def manifest_text(cfg: ExperimentConfig) -> str:
    desk = scale_config(max_samples=cfg.max_samples)
    return "".join([
        f"experiment={cfg.experiment}\n",
        f"seed={cfg.seed}\n",
        f"config_sha256={cfg.digest}\n",
        f"phasekey={__version__}\n",
        f"python={platform.python_version()}\n",
        f"numpy={np.__version__}\n",
        f"scipy={scipy.__version__}\n",
        f"desk_scale_factor={desk.factor}\n",
        f"desk_carrier_hz={desk.carrier_freq_hz}\n",
        f"desk_sample_rate_hz={desk.sample_rate_hz}\n",
        f"desk_coherence_s={desk.coherence_time_s}\n",
        f"desk_guard_s={desk.guard_time_s}\n",
        "--- config ---\n",
        cfg.text(),
    ])


def write_results(cfg: ExperimentConfig, rows: list[ResultRow]):
    """Write ``<out>/<experiment>.csv`` and its manifest; returns both paths."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{cfg.experiment}.csv"
        man_path = out / f"{cfg.experiment}.manifest.txt"
        csv_path.write_text(rows_to_csv(rows))
        man_path.write_text(manifest_text(cfg))
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return csv_path, man_path


# ---- shared pieces -----------------------------------------------------

def _sample_grid(cfg: ExperimentConfig, desk: DeskScale):
    """``(to_us, n_samples)`` pairs, full-scale observation time in microseconds."""
    fs = desk.paper.sample_rate_hz
    if cfg.n_samples:
        pts = [(n / fs * 1e6, int(n)) for n in cfg.n_samples]
    else:
        pts = [(t, int(math.floor(t * 1e-6 * fs + 1e-9))) for t in cfg.to_us]
    for _, n in pts:
        if n < 16:
            raise ValueError(f"grid point with {n} samples; at least 16 required")
        if n > cfg.max_samples:
            raise ValueError(f"grid point with {n} samples exceeds the desk budget {cfg.max_samples}")
    return pts


def _bound_cfg(cfg: ExperimentConfig, desk: DeskScale, snr_db, n, relays, q) -> BoundConfig:
    return BoundConfig.from_snr(snr_from_db(snr_db), sigma_h2=cfg.sigma_h2, n_samples=n,
                                coherence_time_s=desk.paper.coherence_time_s, relays=relays, q=q)


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _prop_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def final_symbol_agreement(batch) -> np.ndarray:
    """Per round, how many final-key symbols A and B hold identically (default K_j1 policy)."""
    cfg = batch.cfg
    shares = accumulate_shares(batch)
    tr = relay_publish(shares)
    ka = assemble_final_key(recover_components(shares, tr, "A"), cfg.relays).bits
    kb = assemble_final_key(recover_components(shares, tr, "B"), cfg.relays).bits
    nb = bits_per_symbol(cfg.q)
    same = (ka == kb).reshape(cfg.relays + 1, batch.n_rounds, nb).all(axis=2)
    return same.sum(axis=0)


def estimator_errors(spec: BeaconSpec, snr_db: float, trials: int, seed: int = 0,
                     sigma_h2: float = 0.5, chunk_samples: int = 4_000_000) -> np.ndarray:
    """Wrapped phase errors of the estimator on ``trials`` beacons of unit-rms gain."""
    sigma2 = snr_to_sigma2(spec, sigma_h2, snr_from_db(snr_db))
    chunk = max(1, chunk_samples // spec.n_samples)
    amp = math.sqrt(2 * sigma_h2)
    out = []
    for i, start in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - start)
        rng = substream(seed, "estimator", i)
        theta = rng.uniform(0.0, 2 * math.pi, m)
        rows = received_tones(spec, amp, theta, sigma2, rng)
        _, est, _ = estimate_batch(rows, spec.sample_rate_hz, reference_omega=spec.omega_c)
        out.append(wrapped_error(est, theta))
    return np.concatenate(out)


def mle_crb_ratio(snr_db: float = 25.0, n_samples: int = 20250, trials: int = 10_000, seed: int = 0):
    """Empirical phase-error variance over the exact CRB.

    Returns ``(ratio, ratio_stderr, variance, crb)``; the standard error uses
    the sample fourth moment.
    """
    spec = scale_config().beacon(n_samples)
    err = estimator_errors(spec, snr_db, trials, seed)
    var = float(np.mean(err**2))
    se = float(np.std(err**2, ddof=1) / math.sqrt(err.size))
    crb = crb_phase_variance(snr_from_db(snr_db), n_samples).var_theta_exact
    return var / crb, se / crb, var, crb


# ---- experiments -------------------------------------------------------

ORACLE_DRAWS = 10_000_000

def _bounds_vs_To(cfg, desk):
    rows = []
    for snr in cfg.snr_db:
        for to_us, n in _sample_grid(cfg, desk):
            for relays in cfg.relays:
                for q in cfg.q:
                    rep = bound_report(_bound_cfg(cfg, desk, snr, n, relays, q))
                    p = dict(snr_db=snr, to_us=to_us, n_samples=n, relays=relays, q=q)
                    rows += [ResultRow(p, "r_mi", rep.r_mi), ResultRow(p, "r_crb", rep.r_crb),
                             ResultRow(p, "p_qia", rep.p_qia), ResultRow(p, "crb_variance", rep.crb_variance)]
    return rows


def _bounds_vs_N(cfg, desk):
    """Cooperative bounds when the whole coherence time is shared among N+2 slots.

    Each slot loses the guard interval, so per-node samples shrink to zero
    at finite N and the CRB rate peaks in between.
    """
    fs = desk.paper.sample_rate_hz
    budget = desk.paper.coherence_time_s * fs / 2
    guard = (desk.paper.delay_spread_s + desk.paper.max_delay_s) * fs
    rows = []
    for snr in cfg.snr_db:
        for q in cfg.q:
            for relays in cfg.relays:
                b = replace(_bound_cfg(cfg, desk, snr, budget, relays, q), guard_samples=guard)
                rep = bound_report(b)
                p = dict(snr_db=snr, to_us=b.coop_samples / fs * 1e6, n_samples=b.coop_samples, q=q, relays=relays)
                rows += [ResultRow(p, "r_mi_coop", rep.r_mi_coop), ResultRow(p, "r_crb_coop", rep.r_crb_coop),
                         ResultRow(p, "p_qia_coop", rep.p_qia_coop), ResultRow(p, "coop_gain", rep.coop_gain)]
    return rows


def _rate_vs_q_point(cfg, desk, snr, to_us, n):
    rows = []
    sim_qs = [q for q in cfg.q if q <= cfg.sim_q_max]
    batch = None
    if sim_qs:
        scfg = desk.session(n, relays=0, q=max(sim_qs), snr_db=snr, sigma_h2=cfg.sigma_h2,
                            amplitude_mode=cfg.amplitude_mode, eavesdropper=False)
        batch = simulate_rounds(scfg, cfg.trials, derive_seed(cfg.seed, cfg.experiment, snr, n))
    tc = desk.paper.coherence_time_s
    for q in cfg.q:
        p = dict(snr_db=snr, to_us=to_us, n_samples=n, q=q)
        rows.append(ResultRow(p, "r_crb", rate_crb(_bound_cfg(cfg, desk, snr, n, 0, q))))
        if batch is not None and q <= cfg.sim_q_max:
            agree = (quantize_phase(batch.estimates[("A", "B")], q) ==
                     quantize_phase(batch.estimates[("B", "A")], q)).astype(float)
            m, se = _mean_se(agree)
            scale = bits_per_symbol(q) / tc
            rows.append(ResultRow(p, "rate_sim", m * scale, se * scale, cfg.trials))
    return rows


def _ber_point(cfg, desk, snr, to_us, n):
    """Index disagreement and bit errors between A and B for every q at one (SNR, N_s)."""
    scfg = desk.session(n, relays=0, q=2, snr_db=snr, sigma_h2=cfg.sigma_h2,
                        amplitude_mode=cfg.amplitude_mode, eavesdropper=False)
    batch = simulate_rounds(scfg, cfg.trials, derive_seed(cfg.seed, cfg.experiment, snr, n))
    crb = crb_phase_variance(snr_from_db(snr), n)
    # the bound formula uses the large-N CRB; the oracle draws at the variance the estimator attains
    var, var_mc = crb.var_theta_lower_bound, crb.var_theta_exact
    rows = []
    for q in cfg.q:
        ia = quantize_phase(batch.estimates[("A", "B")], q)
        ib = quantize_phase(batch.estimates[("B", "A")], q)
        dis = float(np.mean(ia != ib))
        ber = float(np.mean(gray_encode(ia, q) != gray_encode(ib, q)))
        nbits = cfg.trials * bits_per_symbol(q)
        analytic = p_qia(var, q)
        mc, mc_se = p_qia_monte_carlo(var_mc, q, ORACLE_DRAWS, substream(cfg.seed, "oracle", q, n))
        p = dict(snr_db=snr, to_us=to_us, n_samples=n, q=q)
        rows += [
            ResultRow(p, "disagreement_sim", dis, _prop_se(dis, cfg.trials), cfg.trials),
            ResultRow(p, "disagreement_analytic", 1 - analytic),
            ResultRow(p, "disagreement_mc", 1 - mc, mc_se, ORACLE_DRAWS),
            ResultRow(p, "ber_sim", ber, _prop_se(ber, nbits), cfg.trials),
            ResultRow(p, "ber_predicted", predicted_ber(analytic, q)),
        ]
    return rows


def _rate_vs_N_point(cfg, desk, snr, to_us, n, relays, q):
    scfg = desk.session(n, relays=relays, q=q, snr_db=snr, sigma_h2=cfg.sigma_h2,
                        amplitude_mode=cfg.amplitude_mode, eavesdropper=False)
    batch = simulate_rounds(scfg, cfg.trials, derive_seed(cfg.seed, cfg.experiment, snr, n, relays, q))
    counts = final_symbol_agreement(batch)
    scale = bits_per_symbol(q) / desk.paper.coherence_time_s
    m, se = _mean_se(counts)
    p = dict(snr_db=snr, to_us=to_us, n_samples=n, q=q, relays=relays)
    analytic = (relays + 1) * rate_crb(_bound_cfg(cfg, desk, snr, n, 0, q))
    return [ResultRow(p, "rate_sim", m * scale, se * scale, cfg.trials),
            ResultRow(p, "rate_crb_fixed_slot", analytic)]


def session_key_bits(cfg: ExperimentConfig, desk: DeskScale, n: int, relays: int, q: int,
                     snr: float, n_bits: int, seed: int) -> np.ndarray:
    scfg = desk.session(n, relays=relays, q=q, key_bits=n_bits, snr_db=snr, sigma_h2=cfg.sigma_h2,
                        amplitude_mode=cfg.amplitude_mode, eavesdropper=False)
    return run_session(scfg, seed).key_a.bits[:n_bits]


def _nist_point(cfg, desk, snr, to_us, n, relays, q):
    rows = []
    passes = {}
    for s in range(cfg.sequences):
        bits = session_key_bits(cfg, desk, n, relays, q, snr, cfg.seq_bits,
                                derive_seed(cfg.seed, cfg.experiment, "sequence", s))
        for rep in run_all(bits):
            for i, pv in enumerate(rep.p_values):
                name = rep.name if len(rep.p_values) == 1 else f"{rep.name}_{i + 1}"
                rows.append(ResultRow(dict(sequence=s), name, pv, math.nan, rep.n_bits))
            passes[rep.name] = passes.get(rep.name, 0) + int(rep.passed)
    for name, count in passes.items():
        rows.append(ResultRow(dict(sequence="all"), f"{name}_passed", count, math.nan, cfg.sequences))
    return rows


def _e2e_point(cfg, desk, snr, to_us, n, relays, q):
    scfg = desk.session(n, relays=relays, q=q, key_bits=cfg.key_bits, snr_db=snr, sigma_h2=cfg.sigma_h2,
                        amplitude_mode=cfg.amplitude_mode, eavesdropper=False)
    pre, ok, final_bits = [], [], []
    for i in range(cfg.trials):
        seed = derive_seed(cfg.seed, cfg.experiment, snr, n, relays, q, i)
        res = run_session(scfg, seed)
        pre.append(res.bit_mismatches / len(res.key_a))
        rec = reconcile(res.key_a.bits, res.key_b.bits, rng=substream(seed, "sketch"),
                        nonce=seed.to_bytes(8, "big"))
        ok.append(float(rec.agreed))
        out_len = secure_output_length(rec.key_a.size, rec.leaked_bits)
        if rec.agreed and out_len > 0:
            ka = privacy_amplify(rec.key_a, seed, out_len, rec.leaked_bits)
            kb = privacy_amplify(rec.key_b, seed, out_len, rec.leaked_bits)
            final_bits.append(out_len if np.array_equal(ka, kb) else 0)
        else:
            final_bits.append(0)
    p = dict(snr_db=snr, to_us=to_us, n_samples=n, q=q, relays=relays)
    secs = scfg.rounds * desk.paper.coherence_time_s
    rows = []
    for name, vals in (("pre_reconciliation_ber", pre), ("reconciled", ok), ("secret_bits", final_bits)):
        m, se = _mean_se(vals)
        rows.append(ResultRow(p, name, m, se, cfg.trials))
    m, se = _mean_se(np.asarray(final_bits) / secs)
    rows.append(ResultRow(p, "secret_rate", m, se, cfg.trials))
    return rows


def _leakage_point(cfg, desk, snr, to_us, n, relays, q):
    scfg = desk.session(n, relays=relays, q=q, snr_db=snr, sigma_h2=cfg.sigma_h2,
                        amplitude_mode=cfg.amplitude_mode, eavesdropper=True, eve_mode=cfg.eve_mode)
    batch = simulate_rounds(scfg, cfg.trials, derive_seed(cfg.seed, cfg.experiment, snr, n, relays, q))
    rep = eavesdropper_leakage(batch)
    p = dict(snr_db=snr, to_us=to_us, n_samples=n, q=q, relays=relays)
    # under independence 2*n*ln2*MI is chi-square with (q-1)^2 degrees of freedom
    se = (q - 1) * math.sqrt(2.0) / (2 * rep.trials * math.log(2))
    rows = [ResultRow(p, "mi_max", rep.mi_bits_per_symbol, se, rep.trials),
            ResultRow(p, "plugin_bias", rep.bias)]
    rows += [ResultRow(p, f"mi[{k};{s}]", v, se, rep.trials) for (k, s), v in rep.per_pair.items()]
    return rows


def _tasks(cfg: ExperimentConfig, desk: DeskScale):
    """Independent grid-point jobs as ``(function, args)``."""
    pts = _sample_grid(cfg, desk)
    e = cfg.experiment
    if e == "rate_vs_q":
        return [(_rate_vs_q_point, (cfg, desk, s, t, n)) for s in cfg.snr_db for t, n in pts]
    if e in ("ber_vs_q", "ber_vs_To"):
        return [(_ber_point, (cfg, desk, s, t, n)) for s in cfg.snr_db for t, n in pts]
    fn = {"rate_vs_N_sim": _rate_vs_N_point, "nist_table": _nist_point,
          "e2e_keygen": _e2e_point, "eve_leakage": _leakage_point}[e]
    return [(fn, (cfg, desk, s, t, n, r, q)) for s in cfg.snr_db for t, n in pts
            for r in cfg.relays for q in cfg.q]


def _call(task):
    fn, args = task
    return fn(*args)


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Deterministic given ``cfg``; grid points may run on several worker processes."""
    desk = scale_config(max_samples=cfg.max_samples)
    if cfg.experiment == "bounds_vs_To":
        return _bounds_vs_To(cfg, desk)
    if cfg.experiment == "bounds_vs_N":
        return _bounds_vs_N(cfg, desk)
    tasks = _tasks(cfg, desk)
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_call, tasks))
    else:
        parts = [_call(t) for t in tasks]
    return [row for part in parts for row in part]
