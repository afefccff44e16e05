# What does an eavesdropper with its own channels learn?
# Plug-in mutual information between the key symbols and everything E sees.
import math

from phasekey.harness import scale_config
from phasekey.protocol import eavesdropper_leakage, simulate_rounds, xor_leakage_exact

desk = scale_config()
q = 4

honest = desk.session(96, relays=1, q=q)
rep = eavesdropper_leakage(simulate_rounds(honest, 20_000, seed=5))
print("independent channels: max MI", f"{rep.mi_bits_per_symbol:.2e}", "bits/symbol, bias removed", f"{rep.bias:.1e}")
for (k, s), v in sorted(rep.per_pair.items()):
    print(f"  I({k}; {s}) = {v:+.1e}")

# deliberately broken: E sits exactly where a legitimate listener sits
mirror = desk.session(96, relays=1, q=q, eve_mode="mirror")
rep = eavesdropper_leakage(simulate_rounds(mirror, 20_000, seed=5))
print("mirrored channel: max MI", round(rep.mi_bits_per_symbol, 3), "of", math.log2(q), "bits")

print("XOR message vs K_j1, exact:", xor_leakage_exact(q))
