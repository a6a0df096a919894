"""Polynomials P(y) with F_p[t] coefficients and their PET-induction structure.

The coefficient ring of a ``PolyY`` is duck-typed: ``FpPoly`` for ordinary
polynomials, ``MPoly`` when van der Corput shifts are kept symbolic, or
``FqElem`` when a concrete shift u in F_q is substituted.  All that is needed is
``+ - *``, integer powers and ``is_zero()``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence

import numpy as np

from .fpt_ring import FpPoly, PrimeChar
from .mpoly import MPoly


def digit_sum(e: int, p: int) -> int:
    s = 0
    while e:
        e, r = divmod(e, p)
        s += r
    return s


def binom_mod(n: int, k: int, p: int) -> int:
    """C(n, k) mod p by Lucas."""
    out = 1
    while n or k:
        n, a = divmod(n, p)
        k, b = divmod(k, p)
        if b > a:
            return 0
        out = out * math.comb(a, b) % p
    return out


def p_adic_split(e: int, p: int) -> tuple[int, int]:
    """Write e = r * p^j with p not dividing r; returns (r, j)."""
    j = 0
    while e % p == 0:
        e //= p
        j += 1
    return e, j


def _is_p_power(e: int, p: int) -> bool:
    return e >= 1 and p_adic_split(e, p)[0] == 1


class PolyY:
    __slots__ = ("p", "coeffs", "_hash")

    def __init__(self, p: int, coeffs: dict | None = None):
        self.p = int(p)
        self.coeffs = {int(e): c for e, c in (coeffs or {}).items() if not c.is_zero()}
        if any(e < 0 for e in self.coeffs):
            raise ValueError("negative exponent")
        self._hash = None

    # construction
    @classmethod
    def parse(cls, text: str, p: int) -> PolyY:
        from .parsing import parse_polyy_terms

        return cls(int(PrimeChar(p)), parse_polyy_terms(text, p))

    @classmethod
    def monomial(cls, p: int, e: int, c=None) -> PolyY:
        return cls(p, {e: FpPoly(p, (1,)) if c is None else c})

    @classmethod
    def const(cls, p: int, c) -> PolyY:
        return cls(p, {0: c})

    # queries
    @property
    def degree(self) -> int:
        return max(self.coeffs, default=-1)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(e == 0 for e in self.coeffs)

    def constant_term(self):
        return self.coeffs.get(0, self._zero_coeff())

    def exponents(self) -> list[int]:
        return sorted(self.coeffs)

    def _zero_coeff(self):
        if self.coeffs:
            c = next(iter(self.coeffs.values()))
            return c - c
        return FpPoly(self.p)

    def has_fp_coefficients(self) -> bool:
        """True when every coefficient is a constant of F_p (no t, no shift variables)."""
        for c in self.coeffs.values():
            if isinstance(c, FpPoly):
                if c.degree > 0:
                    return False
            elif isinstance(c, MPoly):
                if not c.is_constant():
                    return False
            else:
                return False
        return True

    # arithmetic
    def __add__(self, other: PolyY) -> PolyY:
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c
        return PolyY(self.p, out)

    def __neg__(self) -> PolyY:
        return PolyY(self.p, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: PolyY) -> PolyY:
        return self + (-other)

    def __mul__(self, other) -> PolyY:
        if not isinstance(other, PolyY):
            return PolyY(self.p, {e: c * other for e, c in self.coeffs.items()})
        out: dict = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                out[e] = out[e] + c1 * c2 if e in out else c1 * c2
        return PolyY(self.p, out)

    __rmul__ = __mul__

    def map_coeffs(self, fn) -> PolyY:
        return PolyY(self.p, {e: fn(c) for e, c in self.coeffs.items()})

    def symbolic(self) -> PolyY:
        """Lift FpPoly coefficients to MPoly so u-shifts can stay symbolic."""
        return self.map_coeffs(lambda c: c if isinstance(c, MPoly) else MPoly.from_fppoly(c))

    def shift(self, u) -> PolyY:
        """P(y + u) for u in (an extension of) the coefficient ring."""
        p = self.p
        out: dict = {}
        for e, a in self.coeffs.items():
            upow = {}
            for k in range(e + 1):
                b = binom_mod(e, k, p)
                if not b:
                    continue
                d = e - k
                if d not in upow:
                    upow[d] = u**d if d else None
                term = a * b if d == 0 else a * upow[d] * b
                out[k] = out[k] + term if k in out else term
        return PolyY(p, out)

    def __call__(self, x):
        out = None
        for e, c in self.coeffs.items():
            term = c * (x**e) if e else c
            out = term if out is None else out + term
        return out if out is not None else self._zero_coeff()

    def values(self, F) -> np.ndarray:
        """Index table of y -> P(y) over the finite field ``F`` (FpPoly coefficients)."""
        y = F.elements
        acc = np.zeros((F.q, F.k), dtype=np.int64)
        for e, c in self.coeffs.items():
            a = F.index_of(c)
            v = np.full(F.q, a, dtype=np.int64) if e == 0 else F.mul(a, F.power(y, e))
            acc += F.digits[v]
        return F.from_digits(acc)

    # identity
    def __eq__(self, other):
        return isinstance(other, PolyY) and self.p == other.p and self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.p, frozenset(self.coeffs.items())))
        return self._hash

    def __repr__(self):
        return f"PolyY(p={self.p}, {self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for e in sorted(self.coeffs, reverse=True):
            c = self.coeffs[e]
            cs = str(c)
            mono = "" if e == 0 else ("y" if e == 1 else f"y^{e}")
            if not mono:
                parts.append(cs)
            elif cs == "1":
                parts.append(mono)
            elif "+" in cs or "-" in cs:
                parts.append(f"({cs})*{mono}")
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts)


def as_polyy(P, p: int | None = None) -> PolyY:
    if isinstance(P, PolyY):
        return P
    if isinstance(P, str):
        if p is None:
            raise ValueError("characteristic required to parse a polynomial")
        return PolyY.parse(P, p)
    raise TypeError(f"cannot interpret {P!r} as a polynomial in y")


# derivational degree

def d_deg(P: PolyY) -> int:
    return max((digit_sum(e, P.p) for e in P.coeffs), default=0)


def d_leading_term(P: PolyY) -> PolyY:
    if P.is_constant():
        raise ValueError("derivational leading term of a constant")
    d = d_deg(P)
    return PolyY(P.p, {e: c for e, c in P.coeffs.items() if digit_sum(e, P.p) == d})


# decomposition into additive skeletons

@dataclass(frozen=True)
class AdditiveSkeleton:
    """eta(y) = sum_i a_i y^(p^i)."""

    p: int
    frob_coeffs: tuple

    def __post_init__(self):
        c = list(self.frob_coeffs)
        while c and c[-1].is_zero():
            c.pop()
        object.__setattr__(self, "frob_coeffs", tuple(c))

    @property
    def degree(self) -> int:
        """k with leading term a_k y^(p^k); -1 if empty."""
        return len(self.frob_coeffs) - 1

    def is_zero(self) -> bool:
        return not self.frob_coeffs

    def as_polyy(self, r: int = 1) -> PolyY:
        """eta(y^r)."""
        return PolyY(self.p, {r * self.p**i: a for i, a in enumerate(self.frob_coeffs)})

    def fp_coeffs(self) -> list[int]:
        """Coefficients as F_p integers (requires constant coefficients)."""
        out = []
        for a in self.frob_coeffs:
            if isinstance(a, FpPoly):
                if a.degree > 0:
                    raise ValueError("coefficient outside F_p")
                out.append(a[0])
            else:
                raise ValueError("coefficient outside F_p")
        return out

    def __str__(self):
        return str(self.as_polyy()) if self.frob_coeffs else "0"


@dataclass(frozen=True)
class EtaDecomposition:
    constant: object
    parts: tuple  # ((r, AdditiveSkeleton), ...) with r ascending, p not dividing r

    def reassemble(self, p: int) -> PolyY:
        out = PolyY(p, {0: self.constant})
        for r, eta in self.parts:
            out = out + eta.as_polyy(r)
        return out


def decompose(P: PolyY) -> EtaDecomposition:
    p = P.p
    slots: dict[int, dict[int, object]] = {}
    for e, c in P.coeffs.items():
        if e == 0:
            continue
        r, j = p_adic_split(e, p)
        slots.setdefault(r, {})[j] = c
    zero = P._zero_coeff()
    parts = []
    for r in sorted(slots):
        js = slots[r]
        parts.append((r, AdditiveSkeleton(p, tuple(js.get(j, zero) for j in range(max(js) + 1)))))
    return EtaDecomposition(P.constant_term(), tuple(parts))


def is_separable(P: PolyY) -> bool:
    return all(e == 0 or e % P.p for e in P.coeffs)


def is_additive(P: PolyY) -> bool:
    return all(_is_p_power(e, P.p) for e in P.coeffs)


def essentially_distinct(family: Sequence[PolyY]) -> bool:
    return all(
        not (family[i] - family[j]).is_constant()
        for i in range(len(family))
        for j in range(i + 1, len(family))
    )


def additive_log_degree(P: PolyY) -> int:
    """N with deg(P - P(0)) = p^N, for P of derivational degree at most 1."""
    if d_deg(P) > 1:
        raise ValueError("not additive up to a constant")
    top = max((e for e in P.coeffs if e), default=0)
    return p_adic_split(top, P.p)[1] if top else 0


# weight vectors

@total_ordering
class WeightVector:
    """Sparse counts w_d, compared anti-lexicographically (highest d first)."""

    def __init__(self, counts: dict[int, int]):
        self.counts = {int(d): int(c) for d, c in counts.items() if c}

    @property
    def top(self) -> int:
        return max(self.counts, default=0)

    def __getitem__(self, d: int) -> int:
        return self.counts.get(d, 0)

    def as_tuple(self, length: int | None = None) -> tuple[int, ...]:
        n = length or self.top
        return tuple(self[d] for d in range(1, n + 1))

    def _key(self):
        return tuple(self[d] for d in range(max(self.top, 1), 0, -1))

    def __eq__(self, other):
        return isinstance(other, WeightVector) and self.counts == other.counts

    def __hash__(self):
        return hash(frozenset(self.counts.items()))

    def __lt__(self, other: WeightVector) -> bool:
        for d in range(max(self.top, other.top), 0, -1):
            if self[d] != other[d]:
                return self[d] < other[d]
        return False

    def coarse_step_bound(self) -> int:
        return sum(c * 2**d for d, c in self.counts.items())

    def __repr__(self):
        return f"WeightVector({dict(sorted(self.counts.items()))})"

    def to_json(self) -> dict:
        return {str(d): c for d, c in sorted(self.counts.items())}


def weight_vector(family: Sequence[PolyY]) -> WeightVector:
    seen: dict[int, set] = {}
    for P in family:
        if P.is_constant():
            raise ValueError("weight of a family with a constant member")
        seen.setdefault(d_deg(P), set()).add(d_leading_term(P))
    return WeightVector({d: len(s) for d, s in seen.items()})


def is_standard(family: Sequence[PolyY]) -> bool:
    return bool(family) and d_deg(family[0]) == max(d_deg(P) for P in family)


# van der Corput reduction

@dataclass(frozen=True)
class FTag:
    """Which function rides on a member of the shifted family.

    kind is "shift" (f_i, the member is P_i(y+u)), "conj" (conj f_i, the member
    is P_i(y) with d-deg > 1) or "delta" (f_i(x + P_i(u) - P_i(0)) * conj f_i(x),
    the member is P_i(y) with d-deg 1).
    """

    source: int
    kind: str


@dataclass
class VdcStep:
    i0: int
    second: int
    second_shifted: bool
    shifted_family: list  # P_{u,1}, ..., P_{u,l}
    tags: list  # FTag per member of shifted_family
    reduced: list  # P_{u,j} - P_{u,1}, j >= 2

    @property
    def reduced_tags(self) -> list:
        return self.tags[1:]


def choose_i0(family: Sequence[PolyY]) -> int:
    """Index of minimal derivational degree among members 2..m (0-based 1..m-1).

    Prefers a member whose leading term differs from that of the first one and
    breaks remaining ties by smallest index.  For a singleton it returns 0.
    """
    if len(family) == 1:
        return 0
    lead1 = d_leading_term(family[0])
    dmin = min(d_deg(P) for P in family[1:])
    cands = [i for i in range(1, len(family)) if d_deg(family[i]) == dmin]
    for i in cands:
        if d_leading_term(family[i]) != lead1:
            return i
    return cands[0]


def vdc_reduce(
    family: Sequence[PolyY],
    u=None,
    i0: int | None = None,
    second_shifted: bool | None = None,
    check: bool = True,
) -> VdcStep:
    """One van der Corput step.

    ``u`` is the shift: an element of the coefficient ring, or ``None`` for a fresh
    symbolic variable (coefficients are lifted to MPoly).  The second member is
    P_1(y+u) when P_1 has d-deg > 1 and P_1(y) otherwise, unless
    ``second_shifted`` says otherwise (the nonstandard pre-step uses P_1(y)).
    """
    family = list(family)
    if check:
        if any(P.is_constant() for P in family):
            raise ValueError("family has a constant member")
        if not essentially_distinct(family):
            raise ValueError("family is not essentially distinct")
    if u is None:
        family = [P.symbolic() for P in family]
        level = 1 + max((c.nvars() - 1 for P in family for c in P.coeffs.values()), default=0)
        u = MPoly.var(family[0].p, max(level, 1))
    if i0 is None:
        i0 = choose_i0(family)
    deg = [d_deg(P) for P in family]
    if second_shifted is None:
        second_shifted = deg[0] > 1
    if second_shifted and deg[0] <= 1:
        raise ValueError("only members of d-deg > 1 receive a shifted copy")
    if i0 == 0 and not second_shifted:
        raise ValueError("the first member cannot be its own partner unshifted")

    members: list[tuple[int, bool]] = [(i0, False), (0, second_shifted)]
    for i in range(len(family)):
        if (i, False) not in members:
            members.append((i, False))
    for i in range(len(family)):
        if deg[i] > 1 and (i, True) not in members:
            members.append((i, True))

    shifted_family, tags = [], []
    cache: dict[int, PolyY] = {}
    for i, sh in members:
        if sh:
            if i not in cache:
                cache[i] = family[i].shift(u)
            shifted_family.append(cache[i])
            tags.append(FTag(i, "shift"))
        else:
            shifted_family.append(family[i])
            tags.append(FTag(i, "conj" if deg[i] > 1 else "delta"))
    base = shifted_family[0]
    reduced = [Q - base for Q in shifted_family[1:]]
    return VdcStep(i0, 0, second_shifted, shifted_family, tags, reduced)


# PET trace

@dataclass
class TraceStep:
    index: int
    kind: str  # "quadratic", "linear", "nonstandard", "base"
    family: list
    weight: WeightVector
    standard: bool
    i0: int | None
    reduced: list = dc_field(default_factory=list)
    reduced_leading: list = dc_field(default_factory=list)
    shifts_added: bool = False
    exceptional: int = 0
    N: int = 0
    bound: dict = dc_field(default_factory=dict)


@dataclass
class PetTrace:
    p: int
    family: list
    controlled_index: int
    permutation: list
    steps: list
    s: int
    c1_log_p: Fraction  # C1 = p ** c1_log_p
    alpha: Fraction
    c2: float
    beta: Fraction

    @property
    def c1(self) -> float:
        return float(self.p) ** float(self.c1_log_p)

    def bound(self, u_norm: float, q: int) -> float:
        """C1 * ||f||_{U^s}^alpha + C2 * q^(-beta)."""
        return self.c1 * u_norm ** float(self.alpha) + self.c2 * q ** (-float(self.beta))

    @property
    def reduction_steps(self) -> list:
        return [st for st in self.steps if st.kind != "base"]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "family": [str(P) for P in self.family],
            "controlled_index": self.controlled_index,
            "permutation": self.permutation,
            "s": self.s,
            "C1": self.c1,
            "C1_log_p": str(self.c1_log_p),
            "alpha": str(self.alpha),
            "C2": self.c2,
            "beta": str(self.beta),
            "steps": [
                {
                    "step": st.index,
                    "kind": st.kind,
                    "weight": st.weight.to_json(),
                    "standard": st.standard,
                    "i0": st.i0,
                    "family": [str(P) for P in st.family],
                    "reduced_leading": [str(P) for P in st.reduced_leading],
                    "exceptional_allowance": st.exceptional,
                    "N": st.N,
                    "bound": st.bound,
                }
                for st in self.steps
            ],
        }


def _exceptional_allowance(reduced: Sequence[PolyY], shifts_added: bool) -> int:
    """Count of u values treated as degenerate and bounded by 1 (u = 0 included)."""
    if not shifts_added:
        return 0
    lp = len(reduced)
    dmax = max(P.degree for P in reduced)
    return 1 + (lp + lp * (lp - 1) // 2) * dmax


def pet_trace(
    family: Sequence,
    p: int | None = None,
    mode: str = "standardize",
    max_steps: int = 10_000,
    max_members: int = 1024,
) -> PetTrace:
    """Run the PET induction symbolically down to an additive singleton.

    mode "standardize" permutes the first member of maximal d-deg to the front
    (the bound then controls that member's function); mode "target" keeps the
    order and spends one nonstandard step so the first function is controlled.
    Families of cubic and higher d-deg grow exponentially under the induction,
    so the trace aborts once a reduced family exceeds ``max_members``.
    """
    family = [as_polyy(P, p) for P in family]
    if not family:
        raise ValueError("empty family")
    p = family[0].p
    if any(P.is_constant() for P in family):
        raise ValueError("family has a constant member")
    if not essentially_distinct(family):
        raise ValueError("family is not essentially distinct")
    if mode not in ("standardize", "target"):
        raise ValueError(f"unknown mode {mode!r}")

    perm = list(range(len(family)))
    if mode == "standardize" and not is_standard(family):
        top = max(d_deg(P) for P in family)
        first = next(i for i, P in enumerate(family) if d_deg(P) == top)
        perm = [first] + [i for i in perm if i != first]
    cur = [family[i].symbolic() for i in perm]

    steps: list[TraceStep] = []
    while True:
        if len(steps) > max_steps:
            raise RuntimeError("PET trace did not terminate")
        if len(cur) > max_members:
            raise RuntimeError(f"PET trace exceeded the member budget ({len(cur)} > {max_members})")
        w = weight_vector(cur)
        std = is_standard(cur)
        idx = len(steps)
        if len(cur) == 1 and d_deg(cur[0]) == 1:
            steps.append(TraceStep(idx, "base", cur, w, True, None, N=additive_log_degree(cur[0])))
            break
        if not std:
            top = max(d_deg(P) for P in cur)
            i0 = next(i for i in range(1, len(cur)) if d_deg(cur[i]) == top)
            st = vdc_reduce(cur, i0=i0, second_shifted=False, check=False)
            kind = "nonstandard"
        else:
            st = vdc_reduce(cur, check=False)
            kind = "quadratic" if st.second_shifted else "linear"
        shifts = any(tag.kind == "shift" for tag in st.tags)
        N = additive_log_degree(cur[0]) if d_deg(cur[0]) == 1 else 0
        steps.append(
            TraceStep(
                idx, kind, cur, w, std, st.i0,
                reduced=st.reduced,
                reduced_leading=[d_leading_term(P) for P in st.reduced],
                shifts_added=shifts,
                exceptional=_exceptional_allowance(st.reduced, shifts),
                N=N,
            )
        )
        cur = st.reduced

    # fold the constants from the base case upward
    base = steps[-1]
    s, c1, alpha, c2, beta = 2, Fraction(base.N, 4), Fraction(1), 0.0, Fraction(1)
    base.bound = _bound_json(s, c1, alpha, c2, beta)
    for st in reversed(steps[:-1]):
        linear_like = d_deg(st.family[0]) == 1
        if linear_like:
            c1 = c1 / 2 + alpha * st.N / 2 ** (s + 1)
            s += 1
        else:
            c1 = c1 / 2
            alpha = alpha / 2
        c2 = math.sqrt(st.exceptional + c2) if st.shifts_added else math.sqrt(c2)
        beta = min(beta, Fraction(1)) / 2
        st.bound = _bound_json(s, c1, alpha, c2, beta)

    return PetTrace(p, family, perm[0], perm, steps, s, c1, alpha, c2, beta)


def _bound_json(s, c1, alpha, c2, beta) -> dict:
    return {"s": s, "C1_log_p": str(c1), "alpha": str(alpha), "C2": c2, "beta": str(beta)}
