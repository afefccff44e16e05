# One link, A <-> B, round by round.
# Both ends hear the same fading channel (reciprocity), estimate its phase
# from a noisy beacon, and turn the phase into a few Gray-coded bits.
import math

import numpy as np

from phasekey.harness import scale_config
from phasekey.protocol import accumulate_shares, simulate_rounds
from phasekey.quantizer import p_qia, predicted_ber, quantize_phase
from phasekey.mle import crb_phase_variance

desk = scale_config()
print("desk clock: f_c =", desk.carrier_freq_hz, "Hz, f_s =", desk.sample_rate_hz, "Hz")

# Short beacons keep this quick; 192 samples at 25 dB
cfg = desk.session(192, relays=0, q=16, snr_db=25.0, eavesdropper=False, amplitude_mode="normalized")
batch = simulate_rounds(cfg, 5000, seed=1)

ab = batch.estimates[("A", "B")]   # A's estimate of B's beacon
ba = batch.estimates[("B", "A")]
truth = batch.truth["AB"]
print("first rounds (true, A's, B's):")
for t, a, b in list(zip(truth, ab, ba))[:5]:
    print(f"  {t:.4f}  {a:.4f}  {b:.4f}")

err = np.angle(np.exp(1j * (ab - truth)))
crb = crb_phase_variance(cfg.snr("AB"), 192)
print("phase-error variance", err.var(), "CRB", crb.var_theta_exact)

ia, ib = batch.indices("A", "B"), batch.indices("B", "A")
print("index disagreement", np.mean(ia != ib), "vs 1 - P_QIA", 1 - p_qia(crb.var_theta_lower_bound, 16))

shares = accumulate_shares(batch)
ber = np.mean(shares.k1_a != shares.k1_b)
print("bit error rate", ber, "predicted", predicted_ber(p_qia(crb.var_theta_lower_bound, 16), 16))

# more sectors means more bits per round but more disagreement
for q in (4, 16, 64, 256):
    dis = np.mean(quantize_phase(ab, q) != quantize_phase(ba, q))
    print(f"q={q:4d}: {int(math.log2(q))} bits/round, disagreement {dis:.4f}")
