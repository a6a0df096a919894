"""Exact arithmetic in F_p[t] and its quotient rings F_p[t]/(Q).

Polynomials are stored as tuples of residues ``(c_0, c_1, ..., c_n)`` with
``c_n != 0``; the empty tuple is the zero polynomial.  Everything here is
immutable and pure, so values may be shared freely between threads.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator

MAX_P = 13


class PrimeChar(int):
    """The characteristic p, validated to be a prime in ``[2, MAX_P]``."""

    def __new__(cls, p):
        p = int(p)
        if p < 2 or p > MAX_P or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
            raise ValueError(f"characteristic must be a prime in [2, {MAX_P}], got {p}")
        return super().__new__(cls, p)


def _trim(coeffs: Iterable[int], p: int) -> tuple[int, ...]:
    c = [x % p for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class FpPoly:
    """Element of F_p[t]."""

    __slots__ = ("p", "coeffs", "_hash")

    def __init__(self, p: int, coeffs: Iterable[int] = ()):
        self.p = int(p)
        self.coeffs = _trim(coeffs, self.p)
        self._hash = hash((self.p, self.coeffs))

    # construction helpers
    @classmethod
    def const(cls, p: int, c: int) -> FpPoly:
        return cls(p, (c,))

    @classmethod
    def t(cls, p: int) -> FpPoly:
        return cls(p, (0, 1))

    @classmethod
    def monomial(cls, p: int, deg: int, c: int = 1) -> FpPoly:
        return cls(p, (0,) * deg + (c,))

    @classmethod
    def parse(cls, text: str, p: int) -> FpPoly:
        from .parsing import parse_fpt

        return parse_fpt(text, p)

    # basic queries
    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_one(self) -> bool:
        return self.coeffs == (1,)

    @property
    def lc(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_monic(self) -> bool:
        return self.lc == 1

    def monic(self) -> FpPoly:
        if self.is_zero():
            return self
        inv = pow(self.lc, -1, self.p)
        return FpPoly(self.p, (c * inv for c in self.coeffs))

    def __getitem__(self, j: int) -> int:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else 0

    def __eq__(self, other):
        if isinstance(other, int):
            return self.coeffs == _trim((other,), self.p)
        if not isinstance(other, FpPoly):
            return NotImplemented
        return self.p == other.p and self.coeffs == other.coeffs

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return bool(self.coeffs)

    def __lt__(self, other: FpPoly) -> bool:
        # canonical order: by degree, then coefficient tuple from the top
        return (self.degree, self.coeffs[::-1]) < (other.degree, other.coeffs[::-1])

    def __repr__(self):
        return f"FpPoly({self.p}, {list(self.coeffs)})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for j in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[j]
            if c == 0:
                continue
            mono = "" if j == 0 else ("t" if j == 1 else f"t^{j}")
            if not mono:
                terms.append(str(c))
            elif c == 1:
                terms.append(mono)
            else:
                terms.append(f"{c}*{mono}")
        return "+".join(terms)

    # arithmetic
    def _coerce(self, other) -> FpPoly:
        if isinstance(other, FpPoly):
            if other.p != self.p:
                raise ValueError("characteristic mismatch")
            return other
        if isinstance(other, int):
            return FpPoly(self.p, (other,))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return FpPoly(self.p, ((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)))

    __radd__ = __add__

    def __neg__(self):
        return FpPoly(self.p, (-c for c in self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return FpPoly(self.p)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return FpPoly(self.p, out)

    __rmul__ = __mul__

    def __divmod__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        p = self.p
        r = list(self.coeffs)
        db = other.degree
        inv = pow(other.lc, -1, p)
        if len(r) - 1 < db:
            return FpPoly(p), self
        quot = [0] * (len(r) - db)
        b = other.coeffs
        for i in range(len(r) - 1, db - 1, -1):
            c = r[i] % p
            if c:
                f = c * inv % p
                quot[i - db] = f
                for j in range(db + 1):
                    r[i - db + j] -= f * b[j]
        return FpPoly(p, quot), FpPoly(p, r[:db])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative exponent")
        result, base = FpPoly(self.p, (1,)), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def powmod(self, e: int, mod: FpPoly) -> FpPoly:
        result, base = FpPoly(self.p, (1,)) % mod, self % mod
        while e:
            if e & 1:
                result = (result * base) % mod
            base = (base * base) % mod
            e >>= 1
        return result

    def derivative(self) -> FpPoly:
        return FpPoly(self.p, [j * self.coeffs[j] for j in range(1, len(self.coeffs))])

    def __call__(self, x):
        """Horner evaluation at an int, FpPoly or FqElem."""
        acc = x * 0 if not isinstance(x, int) else 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        if isinstance(acc, int):
            return acc % self.p
        return acc


def gcd(a: FpPoly, b: FpPoly) -> FpPoly:
    """Monic gcd (zero only if both inputs are zero)."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def xgcd(a: FpPoly, b: FpPoly) -> tuple[FpPoly, FpPoly, FpPoly]:
    """Return ``(g, s, u)`` with ``s*a + u*b == g`` and g monic."""
    p = a.p
    r0, r1 = a, b
    s0, s1 = FpPoly(p, (1,)), FpPoly(p)
    u0, u1 = FpPoly(p), FpPoly(p, (1,))
    while not r1.is_zero():
        qt, r = divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 - qt * s1
        u0, u1 = u1, u0 - qt * u1
    if r0.is_zero():
        return r0, s0, u0
    inv = pow(r0.lc, -1, p)
    return r0 * inv, s0 * inv, u0 * inv


def abs_value(n: FpPoly) -> int:
    """|n| = p^deg(n), with |0| = 0."""
    return 0 if n.is_zero() else n.p ** n.degree


def monic_polys(p: int, deg: int) -> Iterator[FpPoly]:
    """All monic polynomials of the given degree, lexicographic in (c_0, c_1, ...)."""
    for low in itertools.product(range(p), repeat=deg):
        yield FpPoly(p, low + (1,))


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


def is_irreducible(f: FpPoly) -> bool:
    """Rabin's test: t^(p^n) = t mod f and gcd(t^(p^(n/r)) - t, f) = 1 for primes r | n."""
    n = f.degree
    if n < 1:
        raise ValueError("irreducibility is undefined for constants")
    if n == 1:
        return True
    f = f.monic()
    p = f.p
    t = FpPoly.t(p)
    for r in _prime_factors(n):
        h = t.powmod(p ** (n // r), f) - t
        if not gcd(h, f).is_one():
            return False
    return (t.powmod(p**n, f) - t).is_zero()


@lru_cache(maxsize=None)
def irreducibles(p: int, deg: int) -> tuple[FpPoly, ...]:
    """All monic irreducibles of a given degree in lexicographic order."""
    return tuple(f for f in monic_polys(p, deg) if is_irreducible(f))


@lru_cache(maxsize=None)
def find_irreducible(p: int, k: int) -> FpPoly:
    """Lexicographically smallest monic irreducible of degree k (low coefficients first)."""
    PrimeChar(p)
    if k < 1:
        raise ValueError("degree must be >= 1")
    if k == 1:
        return FpPoly(p, (0, 1))
    # c_0 = 0 means t divides f, so the search starts at c_0 = 1 with the same order
    for c0 in range(1, p):
        for mid in itertools.product(range(p), repeat=k - 1):
            f = FpPoly(p, (c0,) + mid + (1,))
            if any(f(a) == 0 for a in range(1, p)):
                continue
            if is_irreducible(f):
                return f
    raise AssertionError("unreachable: irreducibles exist in every degree")


def factor(Q: FpPoly) -> tuple[tuple[FpPoly, int], ...]:
    """Factor a monic polynomial by trial division over monic irreducibles."""
    if Q.degree < 1:
        raise ValueError("cannot factor a constant")
    if not Q.is_monic():
        raise ValueError("modulus must be monic")
    out = []
    rest = Q
    d = 1
    while 2 * d <= rest.degree:
        for g in irreducibles(Q.p, d):
            e = 0
            while True:
                qt, r = divmod(rest, g)
                if not r.is_zero():
                    break
                rest, e = qt, e + 1
            if e:
                out.append((g, e))
        d += 1
    if rest.degree >= 1:
        # leftover cofactor has no factor of degree <= deg/2, hence is irreducible
        for i, (g, e) in enumerate(out):
            if g == rest:
                out[i] = (g, e + 1)
                break
        else:
            out.append((rest, 1))
    out.sort(key=lambda ge: (ge[0].degree, ge[0].coeffs))
    return tuple(out)


@dataclass(frozen=True)
class Modulus:
    """A monic modulus Q with lazily computed factorization."""

    Q: FpPoly

    def __post_init__(self):
        if self.Q.degree < 1 or not self.Q.is_monic():
            raise ValueError(f"modulus must be monic of degree >= 1, got {self.Q}")

    @property
    def p(self) -> int:
        return self.Q.p

    @property
    def degree(self) -> int:
        return self.Q.degree

    @property
    def order(self) -> int:
        return self.Q.p ** self.Q.degree

    @cached_property
    def factorization(self) -> tuple[tuple[FpPoly, int], ...]:
        return factor(self.Q)

    @property
    def lpf(self) -> int:
        return min(abs_value(g) for g, _ in self.factorization)

    @cached_property
    def is_irreducible(self) -> bool:
        return is_irreducible(self.Q)

    def __str__(self):
        return str(self.Q)


def factor_and_lpf(Q: Modulus) -> tuple[tuple[tuple[FpPoly, int], ...], int]:
    return Q.factorization, Q.lpf


@dataclass(frozen=True)
class FqElem:
    """Element of F_p[t]/(Q), stored fully reduced."""

    modulus: Modulus
    value: FpPoly

    def __post_init__(self):
        if self.value.degree >= self.modulus.degree:
            object.__setattr__(self, "value", self.value % self.modulus.Q)

    @property
    def p(self) -> int:
        return self.modulus.p

    def _other(self, other) -> FpPoly:
        if isinstance(other, FqElem):
            if other.modulus != self.modulus:
                raise ValueError("modulus mismatch")
            return other.value
        if isinstance(other, (int, FpPoly)):
            return self.value._coerce(other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FqElem(self.modulus, (self.value + o) % self.modulus.Q)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FqElem(self.modulus, (self.value - o) % self.modulus.Q)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FqElem(self.modulus, -self.value)

    def __mul__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FqElem(self.modulus, (self.value * o) % self.modulus.Q)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return FqElem(self.modulus, self.value.powmod(e, self.modulus.Q))

    def inverse(self) -> FqElem:
        g, s, _ = xgcd(self.value, self.modulus.Q)
        if not g.is_one():
            raise ZeroDivisionError(f"{self.value} is not invertible mod {self.modulus.Q}")
        return FqElem(self.modulus, s)

    def is_zero(self) -> bool:
        return self.value.is_zero()

    def index(self) -> int:
        """Canonical index: base-p number whose digits are the coefficients."""
        return sum(c * self.p**j for j, c in enumerate(self.value.coeffs))

    def __str__(self):
        return str(self.value)


class QuotRing:
    """F_p[t]/(Q); a field F_q when Q is irreducible."""

    def __init__(self, modulus: Modulus | FpPoly):
        self.modulus = modulus if isinstance(modulus, Modulus) else Modulus(modulus)

    @property
    def p(self) -> int:
        return self.modulus.p

    @property
    def order(self) -> int:
        return self.modulus.order

    def __call__(self, value) -> FqElem:
        if isinstance(value, int):
            value = FpPoly(self.p, (value,))
        return FqElem(self.modulus, value)

    def element(self, index: int) -> FqElem:
        digits = []
        for _ in range(self.modulus.degree):
            index, d = divmod(index, self.p)
            digits.append(d)
        return FqElem(self.modulus, FpPoly(self.p, digits))

    def __iter__(self) -> Iterator[FqElem]:
        for i in range(self.order):
            yield self.element(i)

    def __len__(self):
        return self.order


def residue_digit(x: FqElem) -> int:
    """Coefficient of t^(d-1) in x, d = deg Q."""
    return x.value[x.modulus.degree - 1]


def residue_char(x: FqElem) -> complex:
    """exp(2 pi i c / p) with c the top residue coefficient of x."""
    return cmath.exp(2j * math.pi * residue_digit(x) / x.p)
