"""Cooperative physical-layer secret-key generation over narrowband Rayleigh fading.

Modules, roughly in signal order:

- ``channel``: block-fading Rayleigh draws
- ``beacon``: received single-tone beacons
- ``mle``: three-step phase estimator and its Cramer-Rao bound
- ``quantizer``: phase sectors, Gray coding, agreement probability
- ``protocol``: the time-slotted relay protocol and eavesdropper view
- ``codes`` / ``reconciliation``: code-offset correction, confirmation, privacy amplification
- ``bounds``: mutual-information and CRB key-rate bounds
- ``randomness``: NIST SP 800-22 subset
- ``harness``: experiment sweeps and CSV output
"""

__version__ = "0.1.0"
