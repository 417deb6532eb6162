"""Arithmetic in GF(2^m), m <= 16, over numpy integer arrays.

Elements are integers 0 .. 2^m - 1 in polynomial basis.  Addition is XOR;
multiplication goes through log/antilog tables built from a fixed primitive
polynomial per field size.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# x^m + ... ; bit i set means x^i present
PRIMITIVE_POLYNOMIALS = {
    2: 0x7,        # x^2 + x + 1
    3: 0xB,        # x^3 + x + 1
    4: 0x13,       # x^4 + x + 1
    5: 0x25,       # x^5 + x^2 + 1
    6: 0x43,       # x^6 + x + 1
    7: 0x89,       # x^7 + x^3 + 1
    8: 0x11D,      # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,      # x^9 + x^4 + 1
    10: 0x409,     # x^10 + x^3 + 1
    11: 0x805,     # x^11 + x^2 + 1
    12: 0x1053,    # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,    # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,    # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,    # x^15 + x + 1
    16: 0x1100B,   # x^16 + x^12 + x^3 + x + 1
}


class SingularMatrixError(ValueError):
    pass


class GF2m:
    def __init__(self, m: int):
        if m not in PRIMITIVE_POLYNOMIALS:
            raise ValueError(f"unsupported field size 2^{m}; need 2 <= m <= 16")
        self.m = m
        self.order = 1 << m
        self.poly = PRIMITIVE_POLYNOMIALS[m]
        q1 = self.order - 1
        exp = np.zeros(2 * q1, dtype=np.int64)
        log = np.full(self.order, -1, dtype=np.int64)
        x = 1
        for i in range(q1):
            if log[x] != -1:
                raise ValueError(f"polynomial {self.poly:#x} is not primitive")
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= self.poly
        exp[q1:] = exp[:q1]
        self._exp = exp
        self._log = log
        self._exp.setflags(write=False)
        self._log.setflags(write=False)

    def __repr__(self):
        return f"GF2m(m={self.m})"

    def __eq__(self, other):
        return isinstance(other, GF2m) and other.m == self.m

    def __hash__(self):
        return hash(("GF2m", self.m))

    def alpha_power(self, i):
        return self._exp[np.asarray(i) % (self.order - 1)]

    def add(self, a, b):
        return np.bitwise_xor(a, b)

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in GF(2^m)")
        return self._exp[(self.order - 1) - self._log[a]]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        out = self._exp[(self._log[a] * e) % (self.order - 1)]
        return np.where(a == 0, 0, out)

    def random(self, shape, rng: np.random.Generator):
        return rng.integers(0, self.order, size=shape, dtype=np.int64)

    # -- linear algebra (row-vector convention: x @ G) ----------------------

    def matmul(self, a, b):
        a = np.atleast_2d(np.asarray(a, dtype=np.int64))
        b = np.atleast_2d(np.asarray(b, dtype=np.int64))
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        if a.shape[1] == 0:
            return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        prod = self.mul(a[:, :, None], b[None, :, :])
        return np.bitwise_xor.reduce(prod, axis=1)

    def vecmat(self, x, g):
        """Row vector times matrix."""
        return self.matmul(np.asarray(x, dtype=np.int64)[None, :], g)[0]

    def rref(self, a):
        """Reduced row echelon form and pivot columns."""
        r = np.array(a, dtype=np.int64, copy=True)
        rows, cols = r.shape
        pivots = []
        row = 0
        for col in range(cols):
            if row == rows:
                break
            nz = np.nonzero(r[row:, col])[0]
            if nz.size == 0:
                continue
            piv = row + nz[0]
            if piv != row:
                r[[row, piv]] = r[[piv, row]]
            r[row] = self.mul(r[row], self.inv(r[row, col]))
            factors = r[:, col].copy()
            factors[row] = 0
            hit = np.nonzero(factors)[0]
            if hit.size:
                r[hit] ^= self.mul(factors[hit, None], r[row][None, :])
            pivots.append(col)
            row += 1
        return r, pivots

    def rank(self, a) -> int:
        a = np.atleast_2d(np.asarray(a))
        if a.size == 0:
            return 0
        return len(self.rref(a)[1])

    def inverse(self, a):
        a = np.asarray(a, dtype=np.int64)
        k = a.shape[0]
        if a.shape != (k, k):
            raise ValueError("matrix must be square")
        aug = np.concatenate([a, np.eye(k, dtype=np.int64)], axis=1)
        r, pivots = self.rref(aug)
        if pivots[:k] != list(range(k)) or len(pivots) < k:
            raise SingularMatrixError("matrix is singular")
        return r[:, k:]


@lru_cache(maxsize=None)
def field(m: int) -> GF2m:
    return GF2m(m)
