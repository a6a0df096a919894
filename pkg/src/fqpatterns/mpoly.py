"""Sparse multivariate polynomials over F_p in t and shift variables u1, u2, ...

These serve as coefficients of polynomials in y when a van der Corput shift
is kept symbolic: a coefficient is "generically nonzero" exactly when it is a
nonzero polynomial in (t, u1, ..., un).
"""

from __future__ import annotations

from itertools import zip_longest

from .fpt_ring import FpPoly


def _strip(e: tuple[int, ...]) -> tuple[int, ...]:
    n = len(e)
    while n and e[n - 1] == 0:
        n -= 1
    return e[:n]


class MPoly:
    """Exponent tuples are ``(deg_t, deg_u1, deg_u2, ...)`` with trailing zeros removed."""

    __slots__ = ("p", "terms", "_hash")

    def __init__(self, p: int, terms: dict | None = None):
        self.p = p
        clean = {}
        for e, c in (terms or {}).items():
            c %= p
            if c:
                e = _strip(tuple(e))
                c = (clean.get(e, 0) + c) % p
                if c:
                    clean[e] = c
                else:
                    clean.pop(e, None)
        self.terms = clean
        self._hash = hash((p, frozenset(clean.items())))

    @classmethod
    def from_fppoly(cls, f: FpPoly) -> MPoly:
        return cls(f.p, {((j,) if j else ()): c for j, c in enumerate(f.coeffs)})

    @classmethod
    def var(cls, p: int, i: int) -> MPoly:
        """Variable i: 0 is t, i >= 1 is u_i."""
        return cls(p, {(0,) * i + (1,): 1})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not e for e in self.terms)

    def nvars(self) -> int:
        return max((len(e) for e in self.terms), default=0)

    def degree_in(self, i: int) -> int:
        return max((e[i] if i < len(e) else 0 for e in self.terms), default=-1)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def to_fppoly(self) -> FpPoly:
        if any(len(e) > 1 for e in self.terms):
            raise ValueError("coefficient depends on shift variables")
        n = max((e[0] if e else 0 for e in self.terms), default=-1) + 1
        c = [0] * n
        for e, v in self.terms.items():
            c[e[0] if e else 0] = v
        return FpPoly(self.p, c)

    def substitute(self, i: int, value) -> "MPoly | object":
        """Replace variable i by ``value`` (any ring element supporting + and *)."""
        out = None
        for e, c in self.terms.items():
            d = e[i] if i < len(e) else 0
            rest = list(e) + [0] * max(0, i + 1 - len(e))
            rest[i] = 0
            term = MPoly(self.p, {tuple(rest): c}) * (value**d if d else 1)
            out = term if out is None else out + term
        return out if out is not None else MPoly(self.p)

    def _coerce(self, other):
        if isinstance(other, MPoly):
            return other
        if isinstance(other, FpPoly):
            return MPoly.from_fppoly(other)
        if isinstance(other, int):
            return MPoly(self.p, {(): other})
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return MPoly(self.p, t)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.p, {e: -c for e, c in self.terms.items()})

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
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip_longest(e1, e2, fillvalue=0))
                t[e] = t.get(e, 0) + c1 * c2
        return MPoly(self.p, t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = MPoly(self.p, {(): 1})
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self.p == other.p and self.terms == other.terms

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"MPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        names = ["t"] + [f"u{i}" for i in range(1, self.nvars() + 1)]
        parts = []
        for e in sorted(self.terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
            c = self.terms[e]
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            if not mono:
                parts.append(str(c))
            else:
                parts.append(mono if c == 1 else f"{c}*{mono}")
        return "+".join(parts)
