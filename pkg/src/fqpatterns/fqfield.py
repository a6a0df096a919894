"""Table-driven realization of F_q = F_p[t]/(Q) for vectorized work.

Elements are the integers ``0..q-1``; the index of ``sum c_j t^j`` is
``sum c_j p^j``.  Addition works digitwise, multiplication through discrete
log tables of a primitive element.  The additive characters are
``chi_s(x) = exp(2 pi i B(s, x) / p)`` where ``B(s, x)`` is the coefficient of
``t^(k-1)`` in ``s*x mod Q``.
"""

from __future__ import annotations

from functools import cached_property, lru_cache

import numpy as np

from .fpt_ring import FpPoly, FqElem, Modulus, PrimeChar, find_irreducible


class FiniteField:
    def __init__(self, modulus: Modulus | FpPoly):
        modulus = modulus if isinstance(modulus, Modulus) else Modulus(modulus)
        if not modulus.is_irreducible:
            raise ValueError(f"{modulus.Q} is not irreducible")
        self.modulus = modulus
        self.p = modulus.p
        self.k = modulus.degree
        self.q = self.p**self.k
        self.weights = self.p ** np.arange(self.k, dtype=np.int64)
        idx = np.arange(self.q, dtype=np.int64)
        self.digits = (idx[:, None] // self.weights[None, :]) % self.p

    @classmethod
    def of_order(cls, q: int) -> FiniteField:
        return _canonical_field(q)

    def __repr__(self):
        return f"FiniteField(q={self.q}, Q={self.modulus.Q})"

    def __eq__(self, other):
        return isinstance(other, FiniteField) and other.modulus == self.modulus

    def __hash__(self):
        return hash(self.modulus)

    # conversions
    def index_of(self, x) -> int:
        if isinstance(x, FqElem):
            if x.modulus != self.modulus:
                raise ValueError("element belongs to a different quotient ring")
            x = x.value
        if isinstance(x, int):
            x = FpPoly(self.p, (x,))
        x = x % self.modulus.Q
        return sum(c * self.p**j for j, c in enumerate(x.coeffs))

    def poly_of(self, i: int) -> FpPoly:
        return FpPoly(self.p, self.digits[int(i)].tolist())

    def elem(self, i: int) -> FqElem:
        return FqElem(self.modulus, self.poly_of(i))

    def from_digits(self, d: np.ndarray) -> np.ndarray:
        return (np.asarray(d) % self.p) @ self.weights

    # additive structure
    def add(self, a, b):
        return self.from_digits(self.digits[a] + self.digits[b])

    def sub(self, a, b):
        return self.from_digits(self.digits[a] - self.digits[b])

    def neg(self, a):
        return self.neg_table[a]

    def scale(self, c: int, a):
        """Multiply by an F_p scalar."""
        return self.from_digits(c * self.digits[a])

    @cached_property
    def neg_table(self) -> np.ndarray:
        return self.from_digits(-self.digits)

    @cached_property
    def add_table(self) -> np.ndarray:
        """``add_table[x, y] = x + y``."""
        d = self.digits
        return ((d[:, None, :] + d[None, :, :]) % self.p) @ self.weights

    # multiplicative structure
    @cached_property
    def _logs(self) -> tuple[np.ndarray, np.ndarray]:
        q, Q = self.q, self.modulus.Q
        if q == 2:
            return np.array([-1, 0]), np.array([1])
        order_divs = [(q - 1) // r for r in _prime_factors(q - 1)]
        for i in range(2, q):
            g = self.poly_of(i)
            if all(not g.powmod(d, Q).is_one() for d in order_divs):
                break
        else:  # pragma: no cover
            raise AssertionError("no primitive element found")
        exp = np.empty(q - 1, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        cur = FpPoly(self.p, (1,))
        for e in range(q - 1):
            j = self.index_of(cur)
            exp[e] = j
            log[j] = e
            cur = (cur * g) % Q
        return log, exp

    @property
    def log_table(self) -> np.ndarray:
        return self._logs[0]

    @property
    def exp_table(self) -> np.ndarray:
        return self._logs[1]

    def mul(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        log, exp = self._logs
        la, lb = log[a], log[b]
        out = exp[(la + lb) % (self.q - 1)]
        return np.where((la < 0) | (lb < 0), 0, out)

    def power(self, a, e: int):
        """Elementwise a**e (with 0**0 = 1)."""
        a = np.asarray(a)
        if e == 0:
            return np.ones_like(a)
        log, exp = self._logs
        la = log[a]
        out = exp[(la * e) % (self.q - 1)]
        return np.where(la < 0, 0, out)

    @cached_property
    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    @lru_cache(maxsize=64)
    def powers_of_all(self, e: int) -> np.ndarray:
        return self.power(self.elements, e)

    @cached_property
    def mul_table(self) -> np.ndarray:
        x = self.elements
        return self.mul(x[:, None], x[None, :])

    # characters
    def residue_digit(self, a):
        return self.digits[a, self.k - 1]

    @cached_property
    def pairing(self) -> np.ndarray:
        """``pairing[s, x] = B(s, x)`` in ``range(p)``."""
        return self.residue_digit(self.mul_table)

    @cached_property
    def roots(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.p) / self.p)

    def char_values(self, s: int) -> np.ndarray:
        """The vector ``chi_s(x)`` over all x."""
        return self.roots[self.residue_digit(self.mul(s, self.elements))]

    @cached_property
    def char_matrix(self) -> np.ndarray:
        return self.roots[self.pairing]

    @cached_property
    def dual_perm(self) -> np.ndarray:
        """``dual_perm[s]`` = index of the digit vector L(s) with B(s, x) = <L(s), x>.

        ``L(s)_j = B(s, t^j)``, so the character chi_s corresponds to the
        standard (Z/p)^k frequency L(s).
        """
        basis = self.weights  # indices of t^j
        cols = self.residue_digit(self.mul(self.elements[:, None], basis[None, :]))
        return self.from_digits(cols)


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def prime_power(q: int) -> tuple[int, int]:
    """Return (p, k) with q = p^k, or raise."""
    for p in range(2, q + 1):
        if q % p == 0:
            k, r = 0, q
            while r % p == 0:
                r //= p
                k += 1
            if r != 1:
                break
            return int(PrimeChar(p)), k
    raise ValueError(f"{q} is not a prime power with supported characteristic")


@lru_cache(maxsize=None)
def _canonical_field(q: int) -> FiniteField:
    p, k = prime_power(q)
    return FiniteField(find_irreducible(p, k))


def field(q: int) -> FiniteField:
    """The canonical F_q (smallest irreducible modulus)."""
    return _canonical_field(q)
