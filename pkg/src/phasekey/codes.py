"""Binary linear block codes: repetition, Hamming and narrow-sense BCH.

Bits are numpy ``uint8`` vectors. For the cyclic codes index ``i`` holds
the coefficient of ``x**i``.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


class DecodingFailure(ValueError):
    """Received word lies outside every decoding sphere."""


# primitive polynomials, bit i = coefficient of x**i
PRIMITIVE_POLY = {3: 0b1011, 4: 0b10011, 5: 0b100101, 6: 0b1000011, 7: 0b10001001,
                  8: 0b100011101, 9: 0b1000010001, 10: 0b10000001001}


def gf2_rank(mat: np.ndarray) -> int:
    return gf2_row_reduce(mat)[1]


def gf2_row_reduce(mat: np.ndarray):
    """Reduced row echelon form over GF(2); returns ``(rref, rank, pivot_cols)``."""
    a = (np.array(mat, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.flatnonzero(a[r:, c])
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a, r, pivots


def gf2_nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis (as rows) of ``{x : mat @ x = 0 mod 2}``."""
    rref, rank, pivots = gf2_row_reduce(mat)
    cols = rref.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = rref[r, f]
    return basis


class LinearCode:
    """An ``[n, k, 2t+1]`` binary code with bounded-distance syndrome decoding.

    The default decoder looks the syndrome up in a table of coset leaders of
    weight ``<= t``; anything else is reported as :class:`DecodingFailure`.
    """

    def __init__(self, generator: np.ndarray, t: int, name: str = "linear"):
        g = np.array(generator, dtype=np.uint8) & 1
        if gf2_rank(g) != g.shape[0]:
            raise ValueError("generator rows are not independent")
        self.generator = g
        self.k, self.n = g.shape
        self.t = int(t)
        self.name = name
        self.parity_check = gf2_nullspace(g)
        self._table = None

    def __repr__(self):
        return f"{type(self).__name__}({self.name}: n={self.n}, k={self.k}, t={self.t})"

    @property
    def redundancy(self) -> int:
        return self.n - self.k

    def encode(self, message) -> np.ndarray:
        m = np.asarray(message, dtype=np.uint8)
        if m.shape[-1] != self.k:
            raise ValueError(f"message must have {self.k} bits")
        return ((m.astype(np.int64) @ self.generator) & 1).astype(np.uint8)

    def random_codeword(self, rng) -> np.ndarray:
        return self.encode(rng.integers(0, 2, self.k, dtype=np.uint8))

    def syndrome(self, word) -> np.ndarray:
        w = np.asarray(word, dtype=np.int64)
        return ((w @ self.parity_check.T.astype(np.int64)) & 1).astype(np.uint8)

    def is_codeword(self, word) -> bool:
        return not self.syndrome(word).any()

    def _syndrome_key(self, s: np.ndarray) -> int:
        return int.from_bytes(np.packbits(s).tobytes(), "big")

    def _build_table(self):
        table = {self._syndrome_key(np.zeros(self.redundancy, np.uint8)): ()}
        for w in range(1, self.t + 1):
            for pos in combinations(range(self.n), w):
                e = np.zeros(self.n, dtype=np.uint8)
                e[list(pos)] = 1
                key = self._syndrome_key(self.syndrome(e))
                if key in table:
                    raise ValueError(f"{self!r} cannot correct all weight-{w} patterns")
                table[key] = pos
        self._table = table

    def decode(self, word) -> np.ndarray:
        """Nearest codeword if within distance ``t``; else raise DecodingFailure."""
        return self.table_decode(word)

    def table_decode(self, word) -> np.ndarray:
        if self._table is None:
            self._build_table()
        w = np.array(word, dtype=np.uint8)
        if w.shape != (self.n,):
            raise ValueError(f"word must have {self.n} bits")
        pos = self._table.get(self._syndrome_key(self.syndrome(w)))
        if pos is None:
            raise DecodingFailure("syndrome matches no correctable error pattern")
        w[list(pos)] ^= 1
        return w


def repetition_code(n: int) -> LinearCode:
    if n < 1 or n % 2 == 0:
        raise ValueError("repetition length must be odd")
    return LinearCode(np.ones((1, n), dtype=np.uint8), (n - 1) // 2, name=f"rep{n}")


def hamming_code(r: int) -> LinearCode:
    """``[2^r - 1, 2^r - 1 - r, 3]`` Hamming code."""
    n = (1 << r) - 1
    cols = np.array([[(j >> i) & 1 for i in range(r)] for j in range(1, n + 1)], dtype=np.uint8).T
    return LinearCode(gf2_nullspace(cols), 1, name=f"hamming({n},{n - r})")


class GF2m:
    """GF(2^m) via exp/log tables."""

    def __init__(self, m: int):
        if m not in PRIMITIVE_POLY:
            raise ValueError(f"no primitive polynomial tabulated for m={m}")
        self.m = m
        self.order = (1 << m) - 1
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(1 << m, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x >> m:
                x ^= PRIMITIVE_POLY[m]
        exp[self.order:] = exp[:self.order]
        self.exp, self.log = exp, log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def pow_alpha(self, e: int) -> int:
        return int(self.exp[e % self.order])

    def minimal_poly(self, e: int) -> int:
        """Minimal polynomial of alpha**e over GF(2), as a bit mask."""
        coset = []
        c = e % self.order
        while c not in coset:
            coset.append(c)
            c = (2 * c) % self.order
        poly = [1]  # coefficients in GF(2^m), lowest degree first
        for c in coset:
            root = self.pow_alpha(c)
            nxt = [0] * (len(poly) + 1)
            for i, a in enumerate(poly):
                nxt[i + 1] ^= a
                nxt[i] ^= self.mul(a, root)
            poly = nxt
        if any(a not in (0, 1) for a in poly):
            raise ArithmeticError("minimal polynomial left GF(2)")
        return sum(a << i for i, a in enumerate(poly))


def _poly_mul_gf2(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


class BCHCode(LinearCode):
    """Narrow-sense primitive binary BCH code of length ``2^m - 1``.

    Decoding uses syndromes over GF(2^m), Berlekamp-Massey and a Chien
    search; the inherited syndrome table stays available as
    :meth:`table_decode` for cross-checking.
    """

    def __init__(self, m: int, t: int):
        field = GF2m(m)
        n = field.order
        g = 1
        used = set()
        for e in range(1, 2 * t + 1):
            mp = field.minimal_poly(e)
            if mp not in used:
                used.add(mp)
                g = _poly_mul_gf2(g, mp)
        deg = g.bit_length() - 1
        k = n - deg
        if k <= 0:
            raise ValueError(f"t={t} too large for n={n}")
        gbits = np.array([(g >> i) & 1 for i in range(deg + 1)], dtype=np.uint8)
        gen = np.zeros((k, n), dtype=np.uint8)
        for i in range(k):
            gen[i, i:i + deg + 1] = gbits
        self.field = field
        self.generator_poly = g
        # alpha^(j*i) for syndrome j = 1..2t and bit position i
        self._powers = field.exp[(np.arange(1, 2 * t + 1)[:, None] * np.arange(n)) % n]
        super().__init__(gen, t, name=f"bch({n},{k},{t})")

    def _syndromes(self, w: np.ndarray) -> list[int]:
        cols = self._powers[:, np.flatnonzero(w)]
        return [int(v) for v in np.bitwise_xor.reduce(cols, axis=1, initial=0)]

    def _berlekamp_massey(self, synd: list[int]) -> list[int]:
        f = self.field
        lam, prev = [1], [1]
        length, shift, b = 0, 1, 1
        for r, s in enumerate(synd):
            d = s
            for i in range(1, length + 1):
                if i < len(lam):
                    d ^= f.mul(lam[i], synd[r - i])
            if d == 0:
                shift += 1
                continue
            coef = f.mul(d, f.inv(b))
            upd = lam + [0] * max(0, len(prev) + shift - len(lam))
            for i, p in enumerate(prev):
                upd[i + shift] ^= f.mul(coef, p)
            if 2 * length <= r:
                prev, length, b, shift = lam, r + 1 - length, d, 1
            else:
                shift += 1
            lam = upd
        while len(lam) > 1 and lam[-1] == 0:
            lam.pop()
        return lam

    def decode(self, word) -> np.ndarray:
        w = np.array(word, dtype=np.uint8)
        if w.shape != (self.n,):
            raise ValueError(f"word must have {self.n} bits")
        synd = self._syndromes(w)
        if not any(synd):
            return w
        lam = self._berlekamp_massey(synd)
        deg = len(lam) - 1
        if deg > self.t:
            raise DecodingFailure("error locator degree exceeds t")
        f = self.field
        # Chien search: error at i  <=>  lambda(alpha^-i) == 0
        i = np.arange(self.n)
        acc = np.zeros(self.n, dtype=np.int64)
        for d, c in enumerate(lam):
            if c:
                acc ^= f.exp[(f.log[c] - d * i) % f.order]
        errors = np.flatnonzero(acc == 0)
        if len(errors) != deg:
            raise DecodingFailure("error locator does not split over the field")
        w[errors] ^= 1
        if not self.is_codeword(w):
            raise DecodingFailure("correction did not reach a codeword")
        return w


def bch_code(m: int = 5, t: int = 3) -> BCHCode:
    return BCHCode(m, t)


DEFAULT_CODE = "bch(31,16,3)"
