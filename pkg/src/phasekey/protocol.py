"""Time-slotted cooperative key generation between A and B through N relays.

Each round is one coherence interval split into N+2 slots:

    TS1      A transmits; B and every relay listen
    TS2      B transmits; A and every relay listen
    TS(2+j)  relay R_j transmits; A and B listen

The eavesdropper E listens in every slot over its own channels. Every
node estimates the phase of what it heard, quantizes it and appends the
Gray-coded index to the component it shares with the transmitter. Relays
publish ``K_j1 xor K_j2``.

Rounds are simulated in vectorized chunks. Each round owns its random
sub-streams, so results do not depend on the chunk size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .beacon import BeaconSpec, received_tones, snr_from_db, snr_to_sigma2
from .channel import wrap_phase
from .mle import estimate_batch
from .quantizer import bits_per_symbol, gray_encode, quantize_phase
from .streams import substream

# desk scale: frequencies x1e-3, times x1e3
DESK_COHERENCE_S = 14.0
DESK_GUARD_S = 1.2e-3 + 33.3e-6  # delay spread + largest propagation delay
CHUNK_SAMPLES = 4_000_000


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    """One key-generation session.

    ``beacon`` is the per-slot observation window. ``link_snr_db`` maps
    link names (``"AB"``, ``"AR1"``, ``"BR2"``, ``"EA"``...) to SNR
    overrides; other links use ``snr_db`` (``math.inf`` is noiseless).
    ``amplitude_mode="normalized"`` fixes every channel gain at its rms
    value so each link sees exactly the nominal SNR; ``"rayleigh"`` draws it.
    ``eve_mode="mirror"`` hands E a legitimate listener's channel in every
    slot (see :func:`eve_links`), a deliberate reciprocity violation used
    as a sanity reference.
    """

    relays: int = 1
    q: int = 16
    key_bits: int = 128
    beacon: BeaconSpec = field(default_factory=BeaconSpec)
    snr_db: float = 25.0
    link_snr_db: tuple = ()
    sigma_h2: float = 0.5
    coherence_time_s: float = DESK_COHERENCE_S
    guard_time_s: float = DESK_GUARD_S
    amplitude_mode: str = "rayleigh"
    rounds_override: int | None = None
    eavesdropper: bool = True
    eve_mode: str = "independent"

    def __post_init__(self):
        if self.relays < 0 or int(self.relays) != self.relays:
            raise ConfigurationError("relays must be a non-negative integer")
        bits_per_symbol(self.q)
        if self.key_bits < 1:
            raise ConfigurationError("key_bits must be positive")
        if self.amplitude_mode not in ("rayleigh", "normalized"):
            raise ConfigurationError(f"unknown amplitude_mode {self.amplitude_mode!r}")
        if self.eve_mode not in ("independent", "mirror"):
            raise ConfigurationError(f"unknown eve_mode {self.eve_mode!r}")
        if self.rounds_override is not None and self.rounds_override < 1:
            raise ConfigurationError("rounds_override must be >= 1")
        if self.guard_time_s < 0:
            raise ConfigurationError("guard time must be >= 0")
        if isinstance(self.link_snr_db, dict):
            object.__setattr__(self, "link_snr_db", tuple(sorted(self.link_snr_db.items())))
        known = set(all_links(self.relays)) | set(eve_link_names(self.relays))
        for name, _ in self.link_snr_db:
            if name not in known:
                raise ConfigurationError(f"unknown link {name!r}")
        if self.beacon.duration_s + self.guard_time_s > self.slot_length_s * (1 + 1e-12):
            raise ConfigurationError(
                f"slot of {self.slot_length_s:.6g} s cannot hold a {self.beacon.duration_s:.6g} s "
                f"beacon plus {self.guard_time_s:.6g} s guard")

    @property
    def slots(self) -> int:
        return self.relays + 2

    @property
    def slot_length_s(self) -> float:
        return self.coherence_time_s / self.slots

    @property
    def bits_per_round(self) -> int:
        return (self.relays + 1) * bits_per_symbol(self.q)

    @property
    def rounds(self) -> int:
        if self.rounds_override is not None:
            return self.rounds_override
        return math.ceil(self.key_bits / self.bits_per_round)

    def snr(self, link: str) -> float:
        return snr_from_db(dict(self.link_snr_db).get(link, self.snr_db))

    def sigma2(self, link: str) -> float:
        return snr_to_sigma2(self.beacon, self.sigma_h2, self.snr(link))


def relay_names(n: int) -> list[str]:
    return [f"R{j}" for j in range(1, n + 1)]


def transmitters(n: int) -> list[str]:
    """Transmitter of each slot, in slot order."""
    return ["A", "B"] + relay_names(n)


def listeners(tx: str, n: int) -> list[str]:
    if tx == "A":
        return ["B"] + relay_names(n)
    if tx == "B":
        return ["A"] + relay_names(n)
    return ["A", "B"]


def link_name(u: str, v: str) -> str:
    order = {"A": 0, "B": 1}
    a, b = sorted((u, v), key=lambda x: (order.get(x, 2), x))
    return a + b


def all_links(n: int) -> list[str]:
    return ["AB"] + [f"A{r}" for r in relay_names(n)] + [f"B{r}" for r in relay_names(n)]


def eve_link_names(n: int) -> list[str]:
    return [f"E{t}" for t in transmitters(n)]


def eve_links(n: int) -> dict:
    """Legitimate link E impersonates in each slot under ``eve_mode='mirror'``.

    E stands where the first listener of each slot stands, so its channel
    is that listener's channel to the transmitter.
    """
    return {tx: link_name(tx, listeners(tx, n)[0]) for tx in transmitters(n)}


def slot_start(cfg: SessionConfig, slot: int) -> float:
    """Start of the usable window of ``slot`` (0-based), measured from the start of the round."""
    return slot * cfg.slot_length_s + cfg.guard_time_s


@dataclass
class RoundBatch:
    """Per-round truths and estimates for a run of consecutive rounds.

    ``truth[link]`` is the channel phase of each round; ``estimates[(rx, tx)]``
    is receiver ``rx``'s phase estimate of ``tx``'s beacon. E's entries use
    ``rx="E"``.
    """

    cfg: SessionConfig
    first_round: int
    truth: dict
    estimates: dict

    @property
    def n_rounds(self) -> int:
        return next(iter(self.truth.values())).size

    def indices(self, rx: str, tx: str) -> np.ndarray:
        return quantize_phase(self.estimates[(rx, tx)], self.cfg.q)


def _layout(cfg: SessionConfig):
    """Row layout of one round: ``(keys, channel_column, sigma2, t0)`` per received beacon.

    Channel columns index the legitimate links first, then E's links.
    """
    n = cfg.relays
    links = all_links(n)
    col = {name: i for i, name in enumerate(links)}
    eve_map = eve_links(n)
    for i, tx in enumerate(transmitters(n)):
        col["E" + tx] = col[eve_map[tx]] if cfg.eve_mode == "mirror" else len(links) + i
    keys, cols, s2, t0 = [], [], [], []
    for slot, tx in enumerate(transmitters(n)):
        rxs = listeners(tx, n) + (["E"] if cfg.eavesdropper else [])
        for rx in rxs:
            name = "E" + tx if rx == "E" else link_name(rx, tx)
            keys.append((rx, tx))
            cols.append(col[name])
            s2.append(cfg.sigma2(name))
            t0.append(slot_start(cfg, slot))
    truth_cols = {name: col[name] for name in links}
    if cfg.eavesdropper:
        truth_cols.update({f"E{tx}": col[f"E{tx}"] for tx in transmitters(n)})
    return keys, np.array(cols), np.array(s2), np.array(t0), truth_cols


def simulate_rounds(cfg: SessionConfig, n_rounds: int | None = None, seed: int = 0,
                    first_round: int = 0) -> RoundBatch:
    """Run ``n_rounds`` rounds (default ``cfg.rounds``) starting at ``first_round``.

    Round ``r`` draws its channels, then E's channels, then the noise of
    every received beacon from ``substream(seed, "round", r)``.
    """
    n_rounds = cfg.rounds if n_rounds is None else n_rounds
    if n_rounds < 1:
        raise ConfigurationError("need at least one round")
    spec = cfg.beacon
    ns = spec.n_samples
    keys, cols, s2, t0, truth_cols = _layout(cfg)
    n_links = len(all_links(cfg.relays))
    n_eve = cfg.relays + 2 if cfg.eavesdropper else 0
    per_round = len(keys)
    chunk = max(1, CHUNK_SAMPLES // (per_round * ns))
    sd = math.sqrt(cfg.sigma_h2)
    noise_sd = np.sqrt(s2)
    truth_parts, est_parts = [], []
    for start in range(first_round, first_round + n_rounds, chunk):
        stop = min(start + chunk, first_round + n_rounds)
        m = stop - start
        iq = np.empty((m, 2, n_links + n_eve))
        noise = np.empty((m, per_round, ns))
        for i, r in enumerate(range(start, stop)):
            rng = substream(seed, "round", r)
            iq[i, :, :n_links] = rng.normal(0.0, sd, (2, n_links))
            if n_eve:
                iq[i, :, n_links:] = rng.normal(0.0, sd, (2, n_eve))
            noise[i] = rng.standard_normal((per_round, ns))
        amp = np.hypot(iq[:, 0], iq[:, 1])
        phase = wrap_phase(np.arctan2(iq[:, 1], iq[:, 0]))
        if cfg.amplitude_mode == "normalized":
            amp[:] = math.sqrt(2 * cfg.sigma_h2)
        rows = received_tones(spec, amp[:, cols].ravel(), phase[:, cols].ravel(), 0.0, None,
                              t0=np.tile(t0, m))
        rows += (noise * noise_sd[None, :, None]).reshape(m * per_round, ns)
        _, theta, _ = estimate_batch(rows, spec.sample_rate_hz, t0=np.tile(t0, m),
                                     reference_omega=spec.omega_c, strict=False)
        truth_parts.append(phase)
        est_parts.append(theta.reshape(m, per_round))
    phase = np.concatenate(truth_parts)
    theta = np.concatenate(est_parts)
    truth = {name: phase[:, c] for name, c in truth_cols.items()}
    est = {key: theta[:, i] for i, key in enumerate(keys)}
    return RoundBatch(cfg, first_round, truth, est)


def run_round(cfg: SessionConfig, round_index: int, seed: int = 0) -> dict:
    """Phase estimates of one round, keyed by ``(receiver, transmitter)``."""
    batch = simulate_rounds(cfg, 1, seed, first_round=round_index)
    return {k: float(v[0]) for k, v in batch.estimates.items()}


@dataclass(frozen=True)
class KeyShares:
    """Per-link bit vectors as held by each end (pre-reconciliation)."""

    q: int
    k1_a: np.ndarray
    k1_b: np.ndarray
    kj1_a: list
    kj1_r: list
    kj2_b: list
    kj2_r: list


@dataclass(frozen=True)
class PublicTranscript:
    xor_messages: list
    eve_estimates: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class FinalKey:
    bits: np.ndarray
    composition: tuple

    def __len__(self):
        return self.bits.size


def _bits(batch: RoundBatch, rx: str, tx: str) -> np.ndarray:
    return gray_encode(batch.indices(rx, tx), batch.cfg.q).reshape(-1)


def accumulate_shares(batch: RoundBatch) -> KeyShares:
    """Concatenate Gray-coded indices round by round into per-link bit vectors."""
    rel = relay_names(batch.cfg.relays)
    return KeyShares(
        q=batch.cfg.q,
        k1_a=_bits(batch, "A", "B"),
        k1_b=_bits(batch, "B", "A"),
        kj1_a=[_bits(batch, "A", r) for r in rel],
        kj1_r=[_bits(batch, r, "A") for r in rel],
        kj2_b=[_bits(batch, "B", r) for r in rel],
        kj2_r=[_bits(batch, r, "B") for r in rel],
    )


def relay_publish(shares: KeyShares, batch: RoundBatch | None = None) -> PublicTranscript:
    """Each relay broadcasts ``K_j1 xor K_j2`` from its own copies."""
    msgs = [a ^ b for a, b in zip(shares.kj1_r, shares.kj2_r)]
    eve = {}
    if batch is not None:
        eve = {tx: v for (rx, tx), v in batch.estimates.items() if rx == "E"}
    return PublicTranscript(msgs, eve)


def recover_components(shares: KeyShares, transcript: PublicTranscript, role: str) -> dict:
    """All 2N+1 components as seen by ``role`` (``"A"`` or ``"B"``).

    A holds K1 and every K_j1 and recovers K_j2 from the XOR messages; B
    symmetrically recovers K_j1.
    """
    if role not in ("A", "B"):
        raise ValueError("role must be 'A' or 'B'")
    own = shares.kj1_a if role == "A" else shares.kj2_b
    if len(transcript.xor_messages) != len(own):
        raise ValueError("transcript and shares disagree on the number of relays")
    comps = {"K1": shares.k1_a if role == "A" else shares.k1_b}
    for j, (mine, msg) in enumerate(zip(own, transcript.xor_messages), start=1):
        if mine.size != msg.size:
            raise ValueError(f"XOR message {j} has {msg.size} bits, local share has {mine.size}")
        other = mine ^ msg
        comps[f"K{j}1"], comps[f"K{j}2"] = (mine, other) if role == "A" else (other, mine)
    return comps


def assemble_final_key(components: dict, relays: int, policy: str = "kj1") -> FinalKey:
    """``K1 || K_1x || ... || K_Nx`` with exactly one member of each relay pair."""
    if policy not in ("kj1", "kj2"):
        raise ValueError("policy must be 'kj1' or 'kj2'")
    pick = "1" if policy == "kj1" else "2"
    order = ["K1"] + [f"K{j}{pick}" for j in range(1, relays + 1)]
    missing = [c for c in order if c not in components]
    if missing:
        raise KeyError(f"missing components: {missing}")
    return FinalKey(np.concatenate([components[c] for c in order]), tuple(order))


@dataclass
class SessionResult:
    cfg: SessionConfig
    batch: RoundBatch
    shares: KeyShares
    transcript: PublicTranscript
    key_a: FinalKey
    key_b: FinalKey

    @property
    def agreed(self) -> bool:
        return bool(np.array_equal(self.key_a.bits, self.key_b.bits))

    @property
    def bit_mismatches(self) -> int:
        return int(np.count_nonzero(self.key_a.bits != self.key_b.bits))


def run_session(cfg: SessionConfig, seed: int = 0, policy: str = "kj1") -> SessionResult:
    batch = simulate_rounds(cfg, seed=seed)
    shares = accumulate_shares(batch)
    tr = relay_publish(shares, batch)
    key_a = assemble_final_key(recover_components(shares, tr, "A"), cfg.relays, policy)
    key_b = assemble_final_key(recover_components(shares, tr, "B"), cfg.relays, policy)
    return SessionResult(cfg, batch, shares, tr, key_a, key_b)


# ---- eavesdropper leakage ------------------------------------------------

def plugin_mutual_information(x, y, nx: int, ny: int) -> float:
    """Empirical-frequency mutual information in bits between two label arrays."""
    x, y = np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)
    joint = np.bincount(x * ny + y, minlength=nx * ny).reshape(nx, ny) / x.size
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / np.outer(px, py)[nz])))


def plugin_bias(nx: int, ny: int, trials: int) -> float:
    """Leading-order upward bias of the plug-in estimate under independence."""
    return (nx - 1) * (ny - 1) / (2 * trials * math.log(2))


@dataclass(frozen=True)
class LeakageReport:
    mi_bits_per_symbol: float
    per_pair: dict
    trials: int
    bias: float


def _symbol(bits: np.ndarray, q: int) -> np.ndarray:
    """Back from Gray bits to 0-based symbol labels, one per round."""
    nb = bits_per_symbol(q)
    b = bits.reshape(-1, nb).astype(np.int64)
    return (b << np.arange(nb - 1, -1, -1)).sum(axis=1)


def eavesdropper_leakage(batch: RoundBatch, shares: KeyShares | None = None,
                         transcript: PublicTranscript | None = None) -> LeakageReport:
    """Bias-corrected plug-in MI between each final-key symbol stream and each thing E sees.

    E's view is its quantized estimate in every slot plus every XOR message.
    Each round is one trial; the reported figure is the largest pairwise MI.
    """
    cfg = batch.cfg
    q = cfg.q
    trials = batch.n_rounds
    if trials < 100 * q * q:
        raise ValueError(f"need at least {100 * q * q} rounds for q={q}, got {trials}")
    if not cfg.eavesdropper:
        raise ValueError("session ran without an eavesdropper")
    shares = shares or accumulate_shares(batch)
    transcript = transcript or relay_publish(shares, batch)
    key = {"K1": batch.indices("A", "B") - 1}
    for j, r in enumerate(relay_names(cfg.relays), start=1):
        key[f"K{j}1"] = batch.indices("A", r) - 1
    seen = {f"E@{tx}": batch.indices("E", tx) - 1 for tx in transmitters(cfg.relays)}
    for j, msg in enumerate(transcript.xor_messages, start=1):
        seen[f"X{j}"] = _symbol(msg, q)
    bias = plugin_bias(q, q, trials)
    pairs = {(k, s): plugin_mutual_information(kv, sv, q, q) - bias
             for k, kv in key.items() for s, sv in seen.items()}
    return LeakageReport(max(pairs.values()), pairs, trials, bias)


def xor_leakage_exact(q: int) -> float:
    """``I(K_j1 xor K_j2; K_j1)`` in bits for uniform independent symbols, by enumeration."""
    bits_per_symbol(q)
    joint = np.zeros((q, q))
    for a in range(q):
        for b in range(q):
            joint[a ^ b, a] += 1.0 / (q * q)
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / np.outer(px, py)[nz])))


# ---- trace -------------------------------------------------------------

def trace_lines(batch: RoundBatch) -> list[str]:
    """One line per slot: round, slot, transmitter, receivers, true phases, estimates, indices."""
    cfg = batch.cfg
    out = []
    for i in range(batch.n_rounds):
        for slot, tx in enumerate(transmitters(cfg.relays), start=1):
            rxs = [rx for (rx, t) in batch.estimates if t == tx]
            parts = []
            for rx in rxs:
                name = "E" + tx if rx == "E" else link_name(rx, tx)
                est = batch.estimates[(rx, tx)][i]
                parts.append(f"{rx}:true={batch.truth[name][i]:.9f},est={est:.9f},"
                             f"idx={quantize_phase(est, cfg.q)}")
            out.append(f"round={batch.first_round + i} slot={slot} tx={tx} rx={','.join(rxs)} "
                       + " ".join(parts))
    return out


def write_trace(batch: RoundBatch, path) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(trace_lines(batch)) + "\n")


def with_samples(cfg: SessionConfig, n_samples: int) -> SessionConfig:
    """Same session with a beacon window holding exactly ``n_samples`` samples."""
    b = cfg.beacon
    return replace(cfg, beacon=BeaconSpec.from_samples(
        n_samples, amplitude_a=b.amplitude_a, carrier_freq_hz=b.carrier_freq_hz,
        sample_rate_hz=b.sample_rate_hz))
