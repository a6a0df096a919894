"""Deciding and probing goodness for irrational equidistribution.

The exact route covers a single P with F_p coefficients: over F_p the twisted
ring F_p[F] (F = Frobenius) is commutative and isomorphic to F_p[X], so P is good
exactly when the additive skeletons eta_i generate the unit ideal.  Everything
else is probed through subgroup spans and character sums over finite fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fplinalg import SpanBuilder, rref_mod_p
from .fpt_ring import FpPoly, Modulus, find_irreducible, factor, gcd, xgcd
from .fqfield import FiniteField, field
from .poly_structure import PolyY, as_polyy, decompose, essentially_distinct

EXHAUSTIVE_LIMIT = 1 << 20
DEFAULT_SAMPLES = 10_000
UNIT_TOL = 1e-9
WITNESS_MAX_DEGREE = 64  # irreducible search past this degree is too slow to be useful


# twisted polynomials

@dataclass(frozen=True)
class TwistedPoly:
    """sum_i c_i F^i with c_i in F_p, i.e. the additive map y -> sum c_i y^(p^i)."""

    poly: FpPoly

    @classmethod
    def from_coeffs(cls, p: int, coeffs) -> TwistedPoly:
        return cls(FpPoly(p, coeffs))

    @property
    def p(self) -> int:
        return self.poly.p

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.poly.coeffs

    @property
    def degree(self) -> int:
        return self.poly.degree

    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def __add__(self, other: TwistedPoly) -> TwistedPoly:
        return TwistedPoly(self.poly + other.poly)

    def __sub__(self, other: TwistedPoly) -> TwistedPoly:
        return TwistedPoly(self.poly - other.poly)

    def compose(self, other: TwistedPoly) -> TwistedPoly:
        """self o other; over F_p this is the product in F."""
        return TwistedPoly(self.poly * other.poly)

    def as_polyy(self, r: int = 1) -> PolyY:
        p = self.p
        return PolyY(p, {r * p**i: FpPoly(p, (c,)) for i, c in enumerate(self.coeffs) if c})

    def apply(self, F: FiniteField, x) -> np.ndarray:
        """Evaluate on field elements given by index."""
        x = np.asarray(x)
        acc = np.zeros(x.shape + (F.k,), dtype=np.int64)
        for i, c in enumerate(self.coeffs):
            if c:
                acc += c * F.digits[F.power(x, self.p**i)]
        return F.from_digits(acc)

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "" if i == 0 else ("F" if i == 1 else f"F^{i}")
            if not mono:
                parts.append(str(c))
            else:
                parts.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(parts)


def twisted_compose(eta: TwistedPoly, zeta: TwistedPoly) -> TwistedPoly:
    return eta.compose(zeta)


# exact classifier

@dataclass
class GoodnessCertificate:
    verdict: str  # "good" | "not_good" | "empirical"
    p: int
    parts: list = dc_field(default_factory=list)  # [(r, TwistedPoly)]
    zetas: list = dc_field(default_factory=list)
    a: int | None = None
    obstruction: TwistedPoly | None = None
    witness_modulus: FpPoly | None = None
    empirical: dict | None = None

    def combination(self) -> TwistedPoly:
        total = TwistedPoly(FpPoly(self.p))
        for (_, eta), zeta in zip(self.parts, self.zetas):
            total = total + twisted_compose(eta, zeta)
        return total

    def check(self) -> bool:
        """Good witnesses must reassemble to a*y exactly."""
        if self.verdict != "good":
            return True
        return self.combination().poly == FpPoly(self.p, (self.a,))

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "p": self.p,
            "parts": [{"r": r, "eta": str(eta)} for r, eta in self.parts],
        }
        if self.verdict == "good":
            out["zetas"] = [str(z) for z in self.zetas]
            out["a"] = self.a
        elif self.verdict == "not_good":
            out["obstruction"] = str(self.obstruction)
            out["witness_modulus"] = str(self.witness_modulus) if self.witness_modulus is not None else None
        if self.empirical is not None:
            out["empirical"] = self.empirical
        return out


def skeletons_over_fp(P: PolyY) -> list[tuple[int, TwistedPoly]]:
    p = P.p
    out = []
    for r, eta in decompose(P).parts:
        try:
            c = eta.fp_coeffs()
        except ValueError:
            raise ValueError("coefficients outside F_p: use classify_family_empirical") from None
        out.append((r, TwistedPoly.from_coeffs(p, c)))
    return out


def multi_xgcd(polys: Sequence[FpPoly]) -> tuple[FpPoly, list[FpPoly]]:
    """g = gcd(polys) (monic, or 0) with cofactors z_i such that sum z_i * polys_i = g."""
    p = polys[0].p
    g = FpPoly(p)
    zs: list[FpPoly] = []
    for f in polys:
        if g.is_zero() and f.is_zero():
            zs.append(FpPoly(p))
            continue
        g2, s, u = xgcd(g, f)
        zs = [z * s for z in zs] + [u]
        g = g2
    return g, zs


def _order_of_x(h: FpPoly) -> int:
    """Multiplicative order of X modulo h (h irreducible, h(0) != 0)."""
    p = h.p
    n = p**h.degree - 1
    X = FpPoly.t(p)
    order = n
    for r in _prime_divisors(n):
        while order % r == 0 and X.powmod(order // r, h).is_one():
            order //= r
    return order


def _prime_divisors(n: int) -> list[int]:
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


def witness_modulus(g: FpPoly, min_degree: int = 1) -> FpPoly:
    """A modulus Q of degree >= min_degree on which the twisted ideal (g) is not onto.

    X | g: Frobenius kills the nilpotent part, so Q = h^2 for an irreducible h.
    Otherwise an irreducible factor h of g with h(0) != 0 divides X^n - 1 where n
    is the order of X mod h (smallest over factors); on F_{p^n} the map
    g(Frobenius) then has a kernel.  Raises ValueError past WITNESS_MAX_DEGREE.
    """
    p = g.p
    if g.is_zero():
        return find_irreducible(p, max(1, min_degree))
    if g.degree < 1:
        raise ValueError("unit ideal has no witness")
    if g[0] == 0:
        h = find_irreducible(p, max(1, (min_degree + 1) // 2))
        return h * h
    n = min(_order_of_x(f) for f, _ in factor(g) if f[0] != 0)
    j = max(1, -(-min_degree // n))
    if n * j > WITNESS_MAX_DEGREE:
        raise ValueError(f"smallest witness has degree {n * j} > {WITNESS_MAX_DEGREE}")
    return find_irreducible(p, n * j)


def classify_single(P, p: int | None = None) -> GoodnessCertificate:
    P = as_polyy(P, p)
    p = P.p
    parts = skeletons_over_fp(P)
    if not parts:
        zero = TwistedPoly(FpPoly(p))
        return GoodnessCertificate("not_good", p, parts, obstruction=zero, witness_modulus=witness_modulus(FpPoly(p)))
    g, zs = multi_xgcd([eta.poly for _, eta in parts])
    if g.degree == 0:
        cert = GoodnessCertificate("good", p, parts, [TwistedPoly(z) for z in zs], a=g[0])
        assert cert.check()
        return cert
    try:
        W = witness_modulus(g)
    except ValueError:
        W = None  # the obstruction still certifies the verdict
    return GoodnessCertificate("not_good", p, parts, obstruction=TwistedPoly(g), witness_modulus=W)


# condition (v): H_Q = sum_i eta_i(F_p[t]_Q)

@dataclass
class SubgroupReport:
    p: int
    dim: int
    basis: np.ndarray  # RREF rows, coefficient vectors of length dim
    Q: FpPoly | None = None
    q: int | None = None

    @property
    def rank(self) -> int:
        return int(self.basis.shape[0])

    @property
    def full(self) -> bool:
        return self.rank == self.dim

    @property
    def index(self) -> int:
        return self.p ** (self.dim - self.rank)

    def contains(self, v) -> bool:
        return rref_mod_p(np.vstack([self.basis, np.asarray(v)[None, :]]), self.p).shape[0] == self.rank

    def to_json(self) -> dict:
        return {
            "Q": str(self.Q) if self.Q is not None else None,
            "q": self.q,
            "dim": self.dim,
            "rank": self.rank,
            "index": self.index,
            "full": self.full,
            "basis": self.basis.tolist(),
        }


def _canon(basis: np.ndarray) -> tuple:
    return tuple(map(tuple, basis.tolist()))


@lru_cache(maxsize=1 << 16)
def _eta_image(eta_coeffs: tuple, Q: FpPoly) -> tuple:
    """RREF basis of eta(F_p[t]_Q); eta_coeffs are FpPoly coefficients of y^(p^j)."""
    p, d = Q.p, Q.degree
    t = FpPoly.t(p)
    cols = []
    for c in range(d):
        acc = FpPoly(p)
        for j, a in enumerate(eta_coeffs):
            if not a.is_zero():
                acc = acc + a * t.powmod(c * p**j, Q)
        acc = acc % Q
        cols.append([acc[i] for i in range(d)])
    return _canon(rref_mod_p(cols, p))


@lru_cache(maxsize=1 << 16)
def _span_sum(a: tuple, b: tuple, p: int, d: int) -> tuple:
    if not a:
        return b
    if not b:
        return a
    if len(a) == d or len(b) == d:
        return a if len(a) == d else b
    return _canon(rref_mod_p(list(a) + list(b), p))


def _condition_v(parts, Qp: FpPoly, p: int) -> SubgroupReport:
    if Qp.p != p:
        raise ValueError("characteristic mismatch")
    d = Qp.degree
    acc: tuple = ()
    for _, eta in parts:
        acc = _span_sum(acc, _eta_image(eta.frob_coeffs, Qp), p, d)
    basis = np.array(acc, dtype=np.int64).reshape(len(acc), d)
    return SubgroupReport(p, d, basis, Q=Qp, q=p**d)


def check_condition_v(P, Q, p: int | None = None) -> SubgroupReport:
    P = as_polyy(P, p)
    Qp = Q.Q if isinstance(Q, Modulus) else Q
    return _condition_v(decompose(P).parts, Qp, P.p)


def check_condition_v_many(P, moduli, p: int | None = None) -> list[SubgroupReport]:
    """check_condition_v over several moduli, decomposing P once."""
    P = as_polyy(P, p)
    parts = decompose(P).parts
    return [_condition_v(parts, Q.Q if isinstance(Q, Modulus) else Q, P.p) for Q in moduli]


# family-level tests over F_q

def _family(family, p=None) -> list[PolyY]:
    fam = [as_polyy(P, p) for P in family]
    if not fam:
        raise ValueError("empty family")
    return fam


def _values_tables(fam: Sequence[PolyY], F: FiniteField) -> np.ndarray:
    return np.stack([P.values(F) for P in fam])


def _combination(V: np.ndarray, s, F: FiniteField) -> np.ndarray:
    """Index table of y -> sum_i s_i P_i(y)."""
    acc = np.zeros((F.q, F.k), dtype=np.int64)
    for si, row in zip(s, V):
        if si:
            acc += F.digits[F.mul(int(si), row)]
    return F.from_digits(acc)


def family_subgroup_test(family, q: int, s_tuple, p: int | None = None, tables=None) -> SubgroupReport:
    F = field(q)
    fam = _family(family, p or F.p)
    s = [int(x) for x in s_tuple]
    if len(s) != len(fam):
        raise ValueError("tuple length differs from family size")
    if not any(s):
        raise ValueError("all-zero tuple")
    V = _values_tables(fam, F) if tables is None else tables
    comb = _combination(V, s, F)
    diffs = (F.digits[comb] - F.digits[comb[0]]) % F.p
    span = SpanBuilder(F.p, F.k).add_many(np.unique(diffs, axis=0))
    return SubgroupReport(F.p, F.k, span.basis(), Q=F.modulus.Q, q=q)


def char_sum(family, q: int, s_tuple, p: int | None = None, tables=None) -> complex:
    """E_y prod_i chi_{s_i}(P_i(y))."""
    F = field(q)
    fam = _family(family, p or F.p)
    V = _values_tables(fam, F) if tables is None else tables
    comb = _combination(V, [int(x) for x in s_tuple], F)
    return complex(F.roots[F.residue_digit(comb)].mean())


def char_sum_table(family, q: int, p: int | None = None, tables=None) -> np.ndarray:
    """All character sums at once: ``T[s_1, ..., s_m]`` over F_q^m (q^m entries)."""
    F = field(q)
    fam = _family(family, p or F.p)
    m = len(fam)
    if q**m > EXHAUSTIVE_LIMIT * 4:
        raise ValueError("character-sum table too large")
    V = _values_tables(fam, F) if tables is None else tables
    N = np.zeros((q,) * m, dtype=np.float64)
    np.add.at(N, tuple(V), 1.0)
    cube = N.reshape((F.p,) * (F.k * m))
    T = np.conj(np.fft.fftn(cube)).reshape((q,) * m) / q
    return T[np.ix_(*([F.dual_perm] * m))]


def trivializing_characters(F: FiniteField, values) -> np.ndarray:
    """All s with chi_s trivial on the subgroup generated by ``values - values[0]``."""
    vals = np.unique(np.asarray(values))
    base = np.asarray(values)[0]
    d = F.sub(vals, base)
    return np.nonzero(np.all(F.pairing[:, d] == 0, axis=1))[0]


def projective_tuples(q: int, m: int):
    """Nonzero tuples in F_q^m whose first nonzero entry is 1."""
    for lead in range(m):
        for rest in itertools.product(range(q), repeat=m - lead - 1):
            yield (0,) * lead + (1,) + rest


@dataclass
class EmpiricalVerdict:
    verdict: str  # "consistent-with-good" | "not-good"
    family: list
    per_q: list
    failures: list
    witness: dict | None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "empirical": True,
            "family": [str(P) for P in self.family],
            "per_q": self.per_q,
            "failures": self.failures,
            "witness": self.witness,
        }


def classify_family_empirical(family, q_list, p: int | None = None, samples: int = DEFAULT_SAMPLES, seed: int = 0, max_failures: int = 64) -> EmpiricalVerdict:
    if not q_list:
        raise ValueError("empty q_list")
    fam = _family(family, p or field(q_list[0]).p)
    if any(P.is_constant() for P in fam):
        raise ValueError("family has a constant member")
    if not essentially_distinct(fam):
        raise ValueError("family is not essentially distinct")
    m = len(fam)
    per_q, failures = [], []
    for q in q_list:
        F = field(q)
        V = _values_tables(fam, F)
        exhaustive = q**m <= EXHAUSTIVE_LIMIT
        if exhaustive:
            T = char_sum_table(fam, q, tables=V)
            mags = np.abs(T).ravel()
            mags[0] = 0.0
            argmax = int(np.argmax(mags))
            max_cs = float(mags[argmax])
            max_at = list(np.unravel_index(argmax, (q,) * m))
            tuples = projective_tuples(q, m)
            tested = (q**m - 1) // (q - 1)
        else:
            rng = np.random.default_rng([seed, q])
            draws = rng.integers(0, q, size=(samples, m))
            draws = draws[np.any(draws != 0, axis=1)]
            tuples = map(tuple, draws.tolist())
            tested = len(draws)
            max_cs, max_at = -1.0, None
        bad = 0
        for s in tuples:
            if not exhaustive:
                cs = abs(char_sum(fam, q, s, tables=V))
                if cs > max_cs:
                    max_cs, max_at = cs, list(s)
            rep = family_subgroup_test(fam, q, s, tables=V)
            if not rep.full:
                bad += 1
                if len(failures) < max_failures:
                    failures.append({"q": q, "s": [int(x) for x in s], "index": rep.index})
        per_q.append(
            {
                "q": q,
                "mode": "exhaustive" if exhaustive else "sampled",
                "tuples_tested": int(tested),
                "non_full": bad,
                "max_char_sum": round(max_cs, 12),
                "max_char_sum_at": [int(x) for x in max_at] if max_at is not None else None,
            }
        )
    failures.sort(key=lambda f: (f["q"], f["s"]))
    verdict = "not-good" if failures else "consistent-with-good"
    return EmpiricalVerdict(verdict, fam, per_q, failures, failures[0] if failures else None)
