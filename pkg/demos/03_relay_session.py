# A full session with two relays, then reconciliation and privacy
# amplification.
import numpy as np

from phasekey.harness import scale_config
from phasekey.protocol import run_session
from phasekey.reconciliation import privacy_amplify, reconcile, secure_output_length

desk = scale_config()
cfg = desk.session(512, relays=2, q=16, key_bits=384, snr_db=25.0)
print("slots per round", cfg.slots, "rounds", cfg.rounds, "bits per round", cfg.bits_per_round)

res = run_session(cfg, seed=2024)
print("components", res.key_a.composition)
print("key length", len(res.key_a), "mismatched bits before reconciliation", res.bit_mismatches)

# what the relays put on the air: K_j1 xor K_j2
for j, msg in enumerate(res.transcript.xor_messages, start=1):
    print(f"R{j} publishes", "".join(map(str, msg[:32])), "...")

rec = reconcile(res.key_a.bits, res.key_b.bits, rng=np.random.default_rng(7), nonce=b"demo")
print("reconciled", rec.agreed, "failed blocks", rec.failed_blocks, "leaked bits", rec.leaked_bits)

n_out = secure_output_length(rec.key_a.size, rec.leaked_bits)
if rec.agreed and n_out > 0:
    ka = privacy_amplify(rec.key_a, 99, n_out, rec.leaked_bits)
    kb = privacy_amplify(rec.key_b, 99, n_out, rec.leaked_bits)
    print(n_out, "secret bits, identical:", np.array_equal(ka, kb))
    print("".join(map(str, ka[:64])))
else:
    print("no secret bits this time")
