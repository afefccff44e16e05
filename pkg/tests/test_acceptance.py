"""Acceptance criteria 1-10 at their stated tolerances.

Each test records a one-line PASS/FAIL summary that is printed at the end
of the pytest run. Run just this file with ``pytest -m acceptance``.
"""

import math
import time
from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from phasekey.bounds import BoundConfig, coop_gain, rate_crb, rate_crb_coop, rate_mi, rate_mi_coop
from phasekey.harness import default_config, mle_crb_ratio, run_experiment, scale_config
from phasekey.protocol import eavesdropper_leakage, run_session, simulate_rounds
from phasekey.reconciliation import default_code, reconcile, recover, sketch
from phasekey.streams import substream

pytestmark = pytest.mark.acceptance

Z_ONE_SIDED_1PCT = 2.326


def _rows(rows, metric, **match):
    return [r for r in rows if r.metric == metric and all(r.params.get(k) == v for k, v in match.items())]


def test_01_mle_vs_crb(report):
    t = time.time()
    ratio, se, var, crb = mle_crb_ratio(snr_db=25.0, n_samples=20250, trials=10_000, seed=1)
    # an efficient estimator lands below the bound half the time; allow sampling noise on that side only
    ok = ratio <= 1.25 and ratio + Z_ONE_SIDED_1PCT * se >= 1.0
    report(1, "MLE/CRB variance ratio", ok,
           f"ratio={ratio:.4f} (se {se:.4f}; var {var:.4e} vs CRB {crb:.4e}; window [1.0, 1.25]) "
           f"in {time.time() - t:.0f}s")
    assert ok


def test_02_noiseless_end_to_end(report):
    desk = scale_config()
    cfg = desk.session(192, relays=1, q=256, key_bits=256, snr_db=math.inf, eavesdropper=False)
    agreed = 0
    for s in range(100):
        res = run_session(cfg, seed=s)
        agreed += res.agreed and len(res.key_a) == 256
    report(2, "noiseless sessions with identical 256-bit keys", agreed == 100, f"{agreed}/100")
    assert agreed == 100


def test_03_ber_prediction(report):
    t = time.time()
    cfg = default_config("ber_vs_q", trials=1_000_000, q=(4, 16, 64), n_samples=(192,),
                         amplitude_mode="normalized", seed=3)
    rows = run_experiment(cfg)
    ok, parts = True, []
    for q in (4, 16, 64):
        sim = _rows(rows, "disagreement_sim", q=q)[0]
        ana = _rows(rows, "disagreement_analytic", q=q)[0]
        mc = _rows(rows, "disagreement_mc", q=q)[0]
        rel = sim.value / ana.value - 1
        z = (sim.value - mc.value) / math.hypot(sim.stderr, mc.stderr)
        ok &= abs(rel) <= 0.20 and abs(z) <= 3
        parts.append(f"q={q}: sim {sim.value:.5f}, 1-P_QIA {ana.value:.5f} ({rel:+.1%}), "
                     f"MC {mc.value:.5f} (z={z:+.2f})")
    report(3, "index disagreement vs 1-P_QIA", ok, "; ".join(parts) + f" in {time.time() - t:.0f}s")
    assert ok


def test_04_rate_vs_q(report):
    t = time.time()
    qs = tuple(2 ** k for k in range(1, 17))
    cfg = default_config("rate_vs_q", trials=2000, q=qs, to_us=(7.5,), seed=4)
    rows = run_experiment(cfg)
    analytic = [_rows(rows, "r_crb", q=q)[0].value for q in qs]
    top = int(np.argmax(analytic))
    unimodal = (0 < top < len(qs) - 1 and np.all(np.diff(analytic[: top + 1]) > 0)
                and np.all(np.diff(analytic[top:]) < 0))
    worst = 0.0
    for q in qs:
        if q <= 64:
            sim = _rows(rows, "rate_sim", q=q)[0].value
            worst = max(worst, abs(sim / _rows(rows, "r_crb", q=q)[0].value - 1))
    ok = unimodal and worst <= 0.20
    report(4, "rate vs q", ok, f"analytic peak at q={qs[top]} (unimodal={unimodal}); "
           f"worst sim/analytic deviation for q<=64 {worst:.2%} in {time.time() - t:.0f}s")
    assert ok


def test_05_cooperative_gain(report):
    base = BoundConfig.from_snr(10 ** 2.5, n_samples=20250)
    parts, ok = [], True
    for n in (1, 2, 4, 8):
        lim, _, _ = coop_gain(replace(base, relays=n), "power", 1e3, 1e9)
        ok &= abs(lim / (n + 1) - 1) <= 0.01
        parts.append(f"N={n}: {lim:.4f}")
    report(5, "cooperative gain limit N+1", ok, ", ".join(parts))
    assert ok


def test_06_bound_ordering(report):
    fs = 2.7e9
    bad = total = 0
    for snr_db in (15.0, 20.0, 25.0):
        for to_us in range(1, 11):
            for n in (0, 1, 2, 4, 8):
                cfg = BoundConfig.from_snr(10 ** (snr_db / 10), n_samples=math.floor(to_us * 1e-6 * fs + 1e-9),
                                           relays=n)
                total += 1
                bad += rate_crb_coop(cfg) > rate_mi_coop(cfg) or rate_crb(cfg) > rate_mi(cfg)
    report(6, "R_CRB <= R_MI on the grid", bad == 0, f"{total - bad}/{total} grid points ordered")
    assert bad == 0


def test_07_linear_in_relays(report):
    t = time.time()
    cfg = default_config("rate_vs_N_sim", relays=tuple(range(1, 9)), q=(16,), to_us=(7.5,), trials=100, seed=7)
    rows = run_experiment(cfg)
    n = np.array([r.params["relays"] for r in _rows(rows, "rate_sim")], dtype=float)
    y = np.array([r.value for r in _rows(rows, "rate_sim")])
    slope, icpt = np.polyfit(n, y, 1)
    r2 = 1 - np.sum((y - (slope * n + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    ok = r2 >= 0.99
    report(7, "simulated rate linear in N", ok,
           f"R^2={r2:.5f}, slope {slope:.1f} bits/s per relay in {time.time() - t:.0f}s")
    assert ok


def test_08_reconciliation(report):
    t = time.time()
    code = default_code()
    rng = substream(8, "keys")
    patterns = [list(p) for w in range(4) for p in combinations(range(code.n), w)]
    exact = 0
    for _ in range(100):
        key = rng.integers(0, 2, code.n, dtype=np.uint8)
        sk = sketch(key, code, rng)
        for pos in patterns:
            kp = key.copy()
            kp[pos] ^= 1
            exact += np.array_equal(recover(kp, sk, code), key)
    caught = 0
    for i in range(10_000):
        r = substream(8, "w4", i)
        key = r.integers(0, 2, code.n, dtype=np.uint8)
        kp = key.copy()
        kp[r.choice(code.n, 4, replace=False)] ^= 1
        res = reconcile(key, kp, code, rng=r, nonce=i.to_bytes(4, "big"))
        caught += (res.failed_blocks > 0) or not res.agreed
    total = 100 * len(patterns)
    ok = exact == total and caught == 10_000
    report(8, "reconciliation", ok, f"weight<=3 exact {exact}/{total}; weight-4 flagged or caught {caught}/10000 "
           f"in {time.time() - t:.0f}s")
    assert ok


def test_09_randomness(report):
    t = time.time()
    cfg = default_config("nist_table", sequences=10, seq_bits=10_000, q=(256,), relays=(1,), n_samples=(192,),
                         seed=9)
    rows = run_experiment(cfg)
    passed = {r.metric[: -len("_passed")]: int(r.value) for r in rows if r.metric.endswith("_passed")}
    ok = len(passed) == 8 and all(v >= 9 for v in passed.values())
    report(9, "NIST subset on key bits", ok,
           ", ".join(f"{k} {v}/10" for k, v in passed.items()) + f" in {time.time() - t:.0f}s")
    assert ok


def test_10_eavesdropper_leakage(report):
    t = time.time()
    cfg = default_config("eve_leakage", trials=100_000, q=(8,), relays=(1,), n_samples=(96,), seed=10)
    rows = run_experiment(cfg)
    mi = _rows(rows, "mi_max")[0]
    # sanity reference: E handed the legitimate channel should learn about log2(q) bits
    desk = scale_config()
    mirror = desk.session(96, relays=1, q=8, eve_mode="mirror")
    ref = eavesdropper_leakage(simulate_rounds(mirror, 6400, seed=10)).mi_bits_per_symbol
    ok = mi.value <= 0.01 and ref > 1.0
    report(10, "eavesdropper leakage", ok, f"max pairwise MI {mi.value:.2e} bits/symbol (se {mi.stderr:.1e}, "
           f"limit 0.01) over {mi.trials} sessions; mirror reference {ref:.2f} bits in {time.time() - t:.0f}s")
    assert ok
