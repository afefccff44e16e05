# The two key-rate bounds, computed in closed form.
from dataclasses import replace

import numpy as np

from phasekey.bounds import BoundConfig, coop_gain, optimal_q, rate_crb, rate_crb_coop, rate_mi, rate_mi_coop

snr = 10 ** 2.5  # 25 dB

# rate vs observation time, no relay
print("T_o [us]   R_MI      R_CRB   (bits/s)")
for to_us in (1, 2, 4, 7.5, 10):
    cfg = BoundConfig.from_snr(snr, n_samples=to_us * 1e-6 * 2.7e9)
    print(f"{to_us:6}  {rate_mi(cfg):9.1f}  {rate_crb(cfg):7.1f}")

# rate vs q: too few sectors waste the estimate, too many break agreement
cfg = BoundConfig.from_snr(snr, n_samples=20250)
qs = [2 ** k for k in range(1, 17)]
print("best q:", optimal_q(cfg, qs))
print([round(rate_crb(replace(cfg, q=q))) for q in qs])

# relays: the whole coherence time is split into N+2 slots, each losing a
# 1.2333 us guard, so the CRB rate peaks and then collapses
cfg = BoundConfig.from_snr(1.0, n_samples=14e-3 * 2.7e9 / 2, q=16, guard_samples=1.2333e-6 * 2.7e9)
relays = np.array([0, 10, 100, 1000, 3000, 6000, 9000, 10500, 11000])
r = [rate_crb_coop(replace(cfg, relays=int(n))) for n in relays]
m = [rate_mi_coop(replace(cfg, relays=int(n))) for n in relays]
for n, a, b in zip(relays, m, r):
    print(f"N={n:6d}  R_MI {a:12.0f}  R_CRB {b:12.0f}")

# and the cooperative gain approaches N+1 as power grows
for n in (1, 2, 4, 8):
    print(n, "relays ->", round(coop_gain(replace(BoundConfig(), relays=n))[0], 3))
