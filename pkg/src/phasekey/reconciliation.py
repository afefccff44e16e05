"""Code-offset reconciliation, key confirmation and Toeplitz privacy amplification."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .codes import BCHCode, DecodingFailure, LinearCode, bch_code
from .streams import as_generator

DEFAULT_DELTA_BITS = 20  # amplification margin 2*log2(1/delta), delta = 2**-20
CONFIRM_BITS = 32


def bits_to_hex(bits) -> str:
    b = np.asarray(bits, dtype=np.uint8)
    return f"{b.size}:" + np.packbits(b).tobytes().hex()


def hex_to_bits(text: str) -> np.ndarray:
    n, _, payload = text.partition(":")
    return np.unpackbits(np.frombuffer(bytes.fromhex(payload), dtype=np.uint8))[: int(n)]


@dataclass(frozen=True)
class SecureSketch:
    s: np.ndarray = field(repr=False)
    code_id: str

    def to_hex(self) -> str:
        return bits_to_hex(self.s)


def _as_bits(x, n: int | None = None) -> np.ndarray:
    b = np.asarray(x, dtype=np.uint8)
    if b.ndim != 1 or np.any(b > 1):
        raise ValueError("expected a 1-D bit vector")
    if n is not None and b.size != n:
        raise ValueError(f"length mismatch: expected {n} bits, got {b.size}")
    return b


def sketch(key, code: LinearCode, rng=None) -> SecureSketch:
    """``s = key XOR c`` for a uniformly random codeword ``c``."""
    k = _as_bits(key, code.n)
    c = code.random_codeword(as_generator(rng))
    return SecureSketch(k ^ c, code.name)


def recover(key_prime, sk: SecureSketch, code: LinearCode) -> np.ndarray:
    """Shift by the sketch, decode, shift back.

    Raises :class:`DecodingFailure` when the offset word is not decodable.
    A result is only guaranteed correct when the keys differ in at most
    ``code.t`` positions; use :func:`confirm` to catch miscorrections.
    """
    if sk.code_id != code.name:
        raise ValueError(f"sketch made with {sk.code_id}, not {code.name}")
    kp = _as_bits(key_prime, code.n)
    c = code.decode(kp ^ sk.s)
    return c ^ sk.s


def _pad(bits: np.ndarray, n: int) -> np.ndarray:
    extra = (-bits.size) % n
    return np.concatenate([bits, np.zeros(extra, dtype=np.uint8)]) if extra else bits


def sketch_blocks(key, code: LinearCode, rng=None) -> list[SecureSketch]:
    """Blockwise sketches; the key is zero-padded to a multiple of ``n``."""
    rng = as_generator(rng)
    k = _pad(_as_bits(key), code.n)
    return [sketch(blk, code, rng) for blk in k.reshape(-1, code.n)]


def recover_blocks(key_prime, sketches: list[SecureSketch], code: LinearCode):
    """Recover blockwise. Returns ``(key, failed_block_mask)``; failed blocks keep ``key_prime``."""
    kp = _as_bits(key_prime)
    padded = _pad(kp, code.n).reshape(-1, code.n)
    if len(sketches) != padded.shape[0]:
        raise ValueError("number of sketches does not match the key length")
    out = padded.copy()
    failed = np.zeros(len(sketches), dtype=bool)
    for i, sk in enumerate(sketches):
        try:
            out[i] = recover(padded[i], sk, code)
        except DecodingFailure:
            failed[i] = True
    return out.reshape(-1)[: kp.size], failed


def confirmation_tag(key, nonce: bytes, nbits: int = CONFIRM_BITS) -> bytes:
    """Short public hash of a key under a public nonce."""
    h = hashlib.blake2b(np.packbits(_as_bits(key)).tobytes(), digest_size=math.ceil(nbits / 8),
                        key=nonce[:64], person=b"phasekey-confirm")
    return h.digest()


def confirm(key_a, key_b, nonce: bytes, nbits: int = CONFIRM_BITS) -> bool:
    return confirmation_tag(key_a, nonce, nbits) == confirmation_tag(key_b, nonce, nbits)


def secure_output_length(n_in: int, leaked_bits: int, margin_bits: int = 2 * DEFAULT_DELTA_BITS) -> int:
    return max(n_in - leaked_bits - margin_bits, 0)


def toeplitz_seed(n_in: int, out_len: int, rng=None) -> np.ndarray:
    return as_generator(rng).integers(0, 2, max(n_in + out_len - 1, 0), dtype=np.uint8)


def privacy_amplify(key, public_seed, out_len: int, leaked_bits: int = 0,
                    margin_bits: int = 2 * DEFAULT_DELTA_BITS) -> np.ndarray:
    """Toeplitz hash of ``key``: output bit ``i`` is the parity of ``key & row_i``.

    ``public_seed`` is either ``n + out_len - 1`` seed bits or an integer
    from which they are drawn. The output length must respect the entropy
    budget ``len(key) - leaked_bits - margin_bits``.
    """
    k = _as_bits(key)
    n = k.size
    if out_len < 0:
        raise ValueError("out_len must be >= 0")
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    budget = secure_output_length(n, leaked_bits, margin_bits)
    if out_len > budget:
        raise ValueError(f"out_len {out_len} exceeds the secure budget {budget}")
    if isinstance(public_seed, (int, np.integer)):
        seed = toeplitz_seed(n, out_len, np.random.default_rng(int(public_seed)))
    else:
        seed = _as_bits(public_seed, n + out_len - 1)
    # T[i, j] = seed[i - j + n - 1]
    t = toeplitz(seed[n - 1:n - 1 + out_len], seed[n - 1::-1])
    return ((t.astype(np.int64) @ k) & 1).astype(np.uint8)


@dataclass
class ReconciliationResult:
    key_a: np.ndarray
    key_b: np.ndarray
    agreed: bool
    failed_blocks: int
    leaked_bits: int
    sketches: list = field(default_factory=list, repr=False)


def reconcile(key_a, key_b, code: LinearCode | None = None, rng=None, nonce: bytes = b"") -> ReconciliationResult:
    """Phase-two correction of B's key toward A's, with key confirmation.

    A publishes blockwise sketches; B recovers; both compare confirmation
    tags. Leaked bits are ``(n - k)`` per block plus the tag length.
    """
    code = code or default_code()
    rng = as_generator(rng)
    a, b = _as_bits(key_a), _as_bits(key_b, np.asarray(key_a).size)
    sks = sketch_blocks(a, code, rng)
    b_fixed, failed = recover_blocks(b, sks, code)
    ok = not failed.any() and confirm(a, b_fixed, nonce or b"\x00")
    leaked = len(sks) * code.redundancy + CONFIRM_BITS
    return ReconciliationResult(a, b_fixed, ok, int(failed.sum()), leaked, sks)


_DEFAULT: BCHCode | None = None


def default_code() -> BCHCode:
    """The shared (31, 16, 3) BCH code."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = bch_code(5, 3)
    return _DEFAULT
