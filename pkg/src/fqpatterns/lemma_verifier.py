"""Numerical checks of the finite inequalities used in the degree-lowering
argument and in the van der Corput step of PET induction.

Every check returns a :class:`VerifyReport` with ``holds`` iff
``lhs <= rhs + 1e-9``.  Inequalities of the form ``A >= B`` are reported with
``lhs = B`` and ``rhs = A``.  Premises such as "the average has norm at least
delta" are measured on the instance; when the measured premise is below
``FLOOR`` the report is marked vacuous.

Maps ``a_i : G_2 -> G_1`` are index tables.  ``G_1`` is always a field F_q;
``G_2`` only enters through averages, so any table length is allowed.  A
polynomial (or its string form) is turned into its value table over F_q.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .equidist import TwistedPoly
from .fpt_ring import FpPoly
from .fqfield import FiniteField, field
from .group_fourier import _gowers_power_batch, delta_all, gowers_power
from .pattern_counter import (
    ENSEMBLES,
    _fmt,
    _trial_discrepancy,
    character_discrepancy_max,
    monotone_trend,
)
from .reporting import jsonable
from .poly_structure import (
    AdditiveSkeleton,
    PolyY,
    as_polyy,
    choose_i0,
    d_deg,
    essentially_distinct,
    pet_trace,
)

FLOOR = 1e-6
HOLD_TOL = 1e-9
STRUCT_TOL = 1e-9
INTERCHANGE_BUDGET = 2e8


@dataclass
class VerifyReport:
    lemma: str
    instance: dict
    lhs: float
    rhs: float
    holds: bool
    margin: float
    vacuous: bool = False
    details: dict = dc_field(default_factory=dict)

    @classmethod
    def make(cls, lemma: str, instance: dict, lhs: float, rhs: float, vacuous: bool = False, **details) -> VerifyReport:
        lhs, rhs = float(lhs), float(rhs)
        return cls(lemma, instance, lhs, rhs, bool(lhs <= rhs + HOLD_TOL), rhs - lhs, bool(vacuous), details)

    @property
    def failed(self) -> bool:
        """A non-vacuous instance where the inequality is violated."""
        return not self.holds and not self.vacuous

    def to_json(self) -> dict:
        return {
            "lemma": self.lemma,
            "instance": self.instance,
            "lhs": _fmt(self.lhs),
            "rhs": _fmt(self.rhs),
            "holds": self.holds,
            "margin": _fmt(self.margin),
            "vacuous": self.vacuous,
            "details": jsonable(self.details),
        }


# shared helpers

def _vals(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=np.complex128)


def _maps(family, F: FiniteField) -> list[np.ndarray]:
    out = []
    for a in family:
        if isinstance(a, (str, PolyY)):
            out.append(as_polyy(a, F.p).values(F))
        else:
            out.append(np.asarray(a, dtype=np.int64))
    if out and len({len(a) for a in out}) != 1:
        raise ValueError("all maps need the same domain size")
    return out


def _l2(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def _char_weight(F: FiniteField, chars, char_maps, n2: int) -> np.ndarray:
    """y -> prod_j chi_{s_j}(b_j(y))."""
    w = np.ones(n2, dtype=np.complex128)
    for s, b in zip(chars, char_maps):
        if s:
            w *= F.char_values(int(s))[b]
    return w


def _avg(F: FiniteField, fs, maps, w: np.ndarray) -> np.ndarray:
    """x -> E_y prod_i f_i(x + a_i(y)) * w(y)."""
    prod = np.broadcast_to(w, (F.q, len(w))).astype(np.complex128)
    for f, a in zip(fs, maps):
        prod = prod * f[F.add_table[:, a]]
    return prod.mean(axis=1)


def _all_deltas(v: np.ndarray, F: FiniteField, s: int) -> np.ndarray:
    """Rows Delta_h f for h in G^s, flattened row-major over (h_1, ..., h_s)."""
    D = np.asarray(v, dtype=np.complex128)[None, :]
    for _ in range(s):
        D = delta_all(D, F).reshape(-1, F.q)
    return D


def _char_corr(rows: np.ndarray, F: FiniteField) -> np.ndarray:
    """C[r, c] = E_x rows[r, x] chi_c(x)."""
    return rows @ F.char_matrix.T / F.q


def _char_add(F: FiniteField, *idx) -> np.ndarray:
    acc = sum(F.digits[np.asarray(i)] for i in idx)
    return F.from_digits(acc % F.p)


def _char_signed_sum(F: FiniteField, terms) -> np.ndarray:
    """Index of prod chi_{s}^(+-1) for (sign, s) pairs."""
    acc = None
    for sign, s in terms:
        d = sign * F.digits[np.asarray(s)]
        acc = d if acc is None else acc + d
    return F.from_digits(acc % F.p)


def _is_structured(f: np.ndarray) -> str | None:
    if np.ptp(f.real) <= STRUCT_TOL and np.ptp(f.imag) <= STRUCT_TOL:
        return "constant"
    if abs(f.mean()) <= STRUCT_TOL:
        return "mean_zero"
    return None


# character families

@dataclass
class CharFamily:
    """h in G^s -> character index, with optional low-rank factors phi_1..phi_m.

    With factors, chi_h = prod_i phi_i((h_j)_{j != i}); each factor is an array
    of shape (q,) * (s - 1) holding character indices.
    """

    F: FiniteField
    s: int
    table: np.ndarray
    factors: list | None = None

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.int64).reshape((self.F.q,) * self.s)

    def chi(self, h) -> int:
        return int(self.table[tuple(h)])

    @property
    def flat(self) -> np.ndarray:
        return self.table.reshape(-1)

    @classmethod
    def from_factors(cls, F: FiniteField, s: int, factors) -> CharFamily:
        if len(factors) > s:
            raise ValueError("at most s factors")
        shape = (F.q,) * s
        table = np.zeros(shape, dtype=np.int64)
        for i, phi in enumerate(factors):
            phi = np.asarray(phi, dtype=np.int64).reshape((F.q,) * (s - 1))
            table = _char_add(F, table, np.broadcast_to(np.expand_dims(phi, i), shape))
        return cls(F, s, table, [np.asarray(p, dtype=np.int64) for p in factors])

    def reconstructs(self) -> bool:
        if self.factors is None:
            return True
        other = CharFamily.from_factors(self.F, self.s, self.factors)
        return bool(np.array_equal(other.table, self.table))

    @classmethod
    def random(cls, F: FiniteField, s: int, rng: np.random.Generator) -> CharFamily:
        return cls(F, s, rng.integers(F.q, size=(F.q,) * s))


# Lemma: multilinear reduction

def verify_multilinear(f_list, family, q: int, chars: Sequence[int] = (), delta: float | None = None) -> VerifyReport:
    """Splitting f_1..f_{l-1} into mean-zero and constant parts loses at most 2^(l-1)."""
    F = field(q)
    maps = _maps(family, F)
    fs = [_vals(f) for f in f_list]
    l, m = len(fs), len(maps)
    if not 1 <= l <= m or len(chars) != m - l:
        raise ValueError("need 1 <= l <= m functions and m - l characters")
    n2 = len(maps[0])
    w = _char_weight(F, chars, maps[l:], n2)
    premise = _l2(_avg(F, fs, maps[:l], w))
    inst = {"q": q, "n2": n2, "l": l, "m": m}
    if delta is None:
        delta = premise
    elif premise < delta:
        return VerifyReport.make("multilinear", inst, 0.0, 0.0, vacuous=True, premise=premise, delta=delta, premise_failed=True)
    parts = [(f - f.mean(), np.full(F.q, f.mean())) for f in fs[:-1]]
    best, best_w = -1.0, None
    for omega in itertools.product((0, 1), repeat=l - 1):
        g = [parts[i][o] for i, o in enumerate(omega)] + [fs[-1]]
        val = _l2(_avg(F, g, maps[:l], w))
        if val > best:
            best, best_w = val, omega
    lhs = delta / 2 ** (l - 1)
    return VerifyReport.make(
        "multilinear", inst, lhs, best, vacuous=delta < FLOOR, premise=premise, delta=delta, omega=list(best_w)
    )


# Lemma: dual function

@dataclass
class DualSetup:
    """A dual-function instance: f_1..f_l, characters chi_{l+1}..chi_m and the built f_0, f~_l."""

    F: FiniteField
    maps: list
    fs: list
    chars: tuple
    f0: np.ndarray
    ftilde: np.ndarray
    delta: float
    eps_override: float | None = None

    @property
    def l(self) -> int:
        return len(self.fs)

    @property
    def n2(self) -> int:
        return len(self.maps[0])

    @classmethod
    def direct(cls, F, ftilde, eps: float = 0.0) -> DualSetup:
        """A bare f~ with a supplied epsilon, for extremal examples."""
        F = field(F) if isinstance(F, int) else F
        v = _vals(ftilde)
        return cls(F, [], [], (), np.zeros(F.q), v, float("nan"), eps)

    def weight(self) -> np.ndarray:
        return _char_weight(self.F, self.chars, self.maps[self.l :], self.n2)

    def lower_level(self) -> float:
        """|| E_y prod_{i<l} f_i(x + a_i(y)) prod_{j>l} chi_j(a_j(y)) - 1_{chi=1} prod E f_i ||_2."""
        F, l = self.F, self.l
        avg = _avg(F, self.fs[: l - 1], self.maps[: l - 1], self.weight())
        if not any(self.chars):
            avg = avg - np.prod([f.mean() for f in self.fs[: l - 1]])
        return _l2(avg)

    def epsilon(self, s: int) -> float:
        """Largest (l-1)-level deviation the degree-lowering proof can call on.

        The maximum runs over Delta_k f_i for every k in G^s and every
        character chi_l at a_l; the characters chi_{l+1}..chi_m are kept for
        s = 0 and dropped for s >= 1.
        """
        if self.eps_override is not None:
            return float(self.eps_override)
        F, l, n2 = self.F, self.l, self.n2
        w = self.weight() if s == 0 else np.ones(n2, dtype=np.complex128)
        trivial_rest = s > 0 or not any(self.chars)
        chi_al = F.char_matrix[:, self.maps[l - 1]].T  # (n2, q): chi_c(a_l(y))
        deltas = [_all_deltas(f, F, s) for f in self.fs[: l - 1]]
        K = F.q**s if deltas else 1
        step = max(1, (1 << 21) // (F.q * n2))
        best = 0.0
        for lo in range(0, K, step):
            ks = slice(lo, min(K, lo + step))
            P = np.broadcast_to(w, (ks.stop - ks.start, F.q, n2)).astype(np.complex128)
            for D, a in zip(deltas, self.maps[: l - 1]):
                P = P * D[ks][:, F.add_table[:, a]]
            M = P @ chi_al / n2  # (k, x, c)
            if trivial_rest:
                means = np.ones(ks.stop - ks.start, dtype=np.complex128)
                for D in deltas:
                    means = means * D[ks].mean(axis=1)
                M[:, :, 0] -= means[:, None]
            best = max(best, float(np.sqrt(np.mean(np.abs(M) ** 2, axis=1)).max()))
        return best


def dual_setup(f_list, chars, family, q: int, frame: str = "absolute") -> DualSetup:
    """Build f_0 as the conjugated average and f~_l from it.

    ``frame="absolute"`` weights the y-average by chi_j(a_j(y)), which is what
    makes <f_l, f~_l> equal ||f_0||^2; ``frame="relative"`` uses
    chi_j((a_j - a_l)(y)) instead.
    """
    F = field(q)
    maps = _maps(family, F)
    fs = [_vals(f) for f in f_list]
    l, m = len(fs), len(maps)
    if not 1 <= l <= m or len(chars) != m - l:
        raise ValueError("need 1 <= l <= m functions and m - l characters")
    for i, f in enumerate(fs[:-1]):
        if _is_structured(f) is None:
            raise ValueError(f"f_{i + 1} must be constant or have mean zero")
    n2 = len(maps[0])
    w = _char_weight(F, chars, maps[l:], n2)
    A = _avg(F, fs, maps[:l], w)
    f0 = np.conj(A)
    al = maps[l - 1]
    if frame == "absolute":
        wt = w
    elif frame == "relative":
        wt = _char_weight(F, chars, [F.sub(b, al) for b in maps[l:]], n2)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    prod = f0[F.add_table[:, F.neg_table[al]]] * wt
    for f, a in zip(fs[:-1], maps[: l - 1]):
        prod = prod * f[F.add_table[:, F.sub(a, al)]]
    ftilde = prod.mean(axis=1)
    return DualSetup(F, maps, fs, tuple(int(c) for c in chars), f0, ftilde, _l2(A))


DUAL_VARIANTS = {
    # name: (character frame for f~, conjugate f~ before measuring)
    "proof": ("absolute", False),
    "conjugate": ("absolute", True),
    "statement": ("relative", False),
}


def verify_dual_function(f_list, chars, family, q: int, variant: str = "proof") -> VerifyReport:
    """f~_l keeps at least delta^3/4 of the average; E f~_l is small when E f_l = 0.

    ``variant="proof"`` measures the seminorm of f~_l built from the
    conjugated dual average.  ``"conjugate"`` measures it on conj(f~_l),
    which is what the duality argument controls when the characters are
    complex; ``"statement"`` uses the relative character frame.
    """
    if variant not in DUAL_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    frame, conj = DUAL_VARIANTS[variant]
    S = dual_setup(f_list, chars, family, q, frame)
    F, l = S.F, S.l
    w = S.weight()

    def seminorm(g):
        return _l2(_avg(F, S.fs[:-1] + [g], S.maps[:l], w))

    conc = seminorm(np.conj(S.ftilde) if conj else S.ftilde)
    lhs = S.delta**3 / 4
    inst = {"q": q, "n2": S.n2, "l": l, "m": len(S.maps), "variant": variant}
    details = {"delta": S.delta, "near_miss": conc < 2 * lhs, "conj_seminorm": seminorm(np.conj(S.ftilde))}
    holds_mean, margin_mean = True, math.inf
    if abs(S.fs[-1].mean()) <= STRUCT_TOL:
        eps = S.lower_level()
        mean_ft = abs(S.ftilde.mean())
        holds_mean = bool(mean_ft <= eps + HOLD_TOL)
        margin_mean = eps - mean_ft
        details.update(mean_clause=True, eps=eps, mean_ftilde=mean_ft, mean_holds=holds_mean)
    rep = VerifyReport.make("dual_function", inst, lhs, conc, vacuous=S.delta < FLOOR, **details)
    rep.holds = rep.holds and holds_mean
    rep.margin = float(min(rep.margin, margin_mean))
    return rep


def dual_operator_norm(f_list, chars, family, q: int, frame: str = "absolute") -> float:
    """Operator norm of f_0 -> E_y prod_{i<l} f_i(x + a_i(y)) f~_l(x + a_l(y)) prod chi_j(a_j(y)).

    f~_l is linear in f_0, so when this is below delta^3/4 no choice of f_0
    can meet the dual-function bound.
    """
    S = dual_setup(f_list, chars, family, q, frame)
    F, l = S.F, S.l
    w = S.weight()
    wt = w if frame == "absolute" else _char_weight(F, S.chars, [F.sub(b, S.maps[l - 1]) for b in S.maps[l:]], S.n2)
    al = S.maps[l - 1]
    base = wt[None, :] * np.ones((F.q, 1))
    for f, a in zip(S.fs[:-1], S.maps[: l - 1]):
        base = base * f[F.add_table[:, F.sub(a, al)]]
    shift = F.add_table[:, F.neg_table[al]]  # x - a_l(y)
    cols = []
    for j in range(F.q):
        ft = (base * (shift == j)).mean(axis=1)
        cols.append(_avg(F, S.fs[:-1] + [ft], S.maps[:l], w))
    return float(np.linalg.norm(np.array(cols).T, 2))


# character correlations

def extract_char_family(f, s: int, q: int) -> tuple[CharFamily, VerifyReport]:
    """chi_h maximizing |E_x Delta_h f chi_h| for each h in G^s (first index on ties)."""
    if s not in (0, 1, 2):
        raise ValueError("s must be 0, 1 or 2")
    F = field(q)
    v = _vals(f)
    D = _all_deltas(v, F, s)
    C = np.abs(_char_corr(D, F))
    table = np.argmax(np.round(C, 12), axis=1)
    corr = C[np.arange(len(C)), table]
    fam = CharFamily(F, s, table)
    rhs = float(corr.mean())
    lhs = gowers_power(v, s + 2, F)
    return fam, VerifyReport.make("char_family", {"q": q, "s": s}, lhs, rhs, vacuous=lhs < FLOOR)


def _family_corr(v: np.ndarray, fam: CharFamily) -> float:
    """E_h |E_x Delta_h f(x) chi_h(x)|."""
    F = fam.F
    D = _all_deltas(v, F, fam.s)
    chi = F.char_matrix[fam.flat]
    return float(np.abs((D * chi).mean(axis=1)).mean())


def verify_low_rank(f, phi_factors, s: int, m: int, q: int) -> VerifyReport:
    """E_h |E_x Delta_h f chi_h| <= ||f||_{U^{s+1}}^(2^(s-m)) for chi of rank m."""
    if not 0 <= m <= s <= 3 or len(phi_factors) != m:
        raise ValueError("need 0 <= m <= s <= 3 and m factors")
    F = field(q)
    v = _vals(f)
    fam = CharFamily.from_factors(F, s, phi_factors)
    lhs = _family_corr(v, fam)
    rhs = gowers_power(v, s + 1, F) ** (2.0 ** (-m - 1))
    return VerifyReport.make("low_rank", {"q": q, "s": s, "m": m}, lhs, rhs)


# Lemma: difference interchange

def interchange_char(fam: CharFamily, h0: np.ndarray, h1: np.ndarray) -> np.ndarray:
    """chi_{h0,h1} = prod over omega in {0,1}^s of C^{|omega|} chi_{h^omega}.

    C is complex conjugation, so a coordinate taken from h1 flips the sign
    of that term.  ``h0`` and ``h1`` are (n, s) arrays of pairs.
    """
    F, s = fam.F, fam.s
    terms = []
    if s == 0:
        return np.full(len(h0), int(fam.table), dtype=np.int64)
    for omega in itertools.product((0, 1), repeat=s):
        h = np.stack([h1[:, i] if o else h0[:, i] for i, o in enumerate(omega)], axis=1)
        terms.append((-1 if sum(omega) % 2 else 1, fam.table[tuple(h.T)]))
    return _char_signed_sum(F, terms)


def verify_diff_interchange(f2d, fam: CharFamily, H=None, s: int | None = None, budget: float = INTERCHANGE_BUDGET) -> VerifyReport:
    """(|G_1|^-s sum_H |E_x Delta_h F chi_h|)^(2^s) <= |G_1|^-2s sum_{H^2} |E_{x,y} Delta_{h0-h1} f chi_{h0,h1}|.

    ``f2d`` has shape (|G_1|, |G_2|); F(x) = E_y f(x, y) and differences act
    on x only.  ``H`` is a boolean mask of shape (q,) * s (default: all).
    """
    F = fam.F
    s = fam.s if s is None else s
    if s != fam.s or s not in (0, 1, 2):
        raise ValueError("s must be 0, 1 or 2 and match the character family")
    f2d = np.asarray(f2d, dtype=np.complex128)
    q, n2 = f2d.shape
    if q != F.q:
        raise ValueError("first axis must be G_1")
    mask = np.ones((q,) * s, dtype=bool) if H is None else np.asarray(H, dtype=bool).reshape((q,) * s)
    hs = np.argwhere(mask) if s else np.zeros((1, 0), dtype=np.int64)
    npairs = len(hs) ** 2
    if float(npairs) * q + float(q**s) * q * n2 > budget:
        raise ValueError("instance exceeds the interchange budget")
    Fx = f2d.mean(axis=1)
    DF = _all_deltas(Fx, F, s)
    flat_h = np.ravel_multi_index(hs.T, (q,) * s) if s else np.zeros(1, dtype=np.int64)
    chi = F.char_matrix[fam.flat[flat_h]]
    lhs_sum = float(np.abs((DF[flat_h] * chi).mean(axis=1)).sum())
    lhs = (lhs_sum / q**s) ** (2**s)

    # g_k(x) = E_y Delta^{(1)}_k f(x, y) for all k in G_1^s
    D = f2d.T[:, None, :]  # (n2, 1, q)
    for _ in range(s):
        D = delta_all(D.reshape(n2, -1, q), F).reshape(n2, -1, q)
    g = D.reshape(n2, -1, q).mean(axis=0)  # (q^s, q)
    T = _char_corr(g, F)  # T[k, c]
    i0, i1 = np.meshgrid(np.arange(len(hs)), np.arange(len(hs)), indexing="ij")
    i0, i1 = i0.ravel(), i1.ravel()
    h0, h1 = hs[i0], hs[i1]
    k = F.sub(h0, h1)
    kflat = np.ravel_multi_index(k.T, (q,) * s) if s else np.zeros(len(i0), dtype=np.int64)
    c = interchange_char(fam, h0, h1)
    rhs = float(np.abs(T[kflat, c]).sum()) / q ** (2 * s)
    inst = {"q1": q, "n2": n2, "s": s, "H_size": int(len(hs))}
    return VerifyReport.make("diff_interchange", inst, lhs, rhs)


# Lemma: finite index subgroup

def _subgroup(eta, F: FiniteField) -> np.ndarray:
    if isinstance(eta, AdditiveSkeleton):
        vals = eta.as_polyy().values(F)
    elif hasattr(eta, "apply"):
        vals = eta.apply(F, F.elements)
    elif isinstance(eta, (str, PolyY)):
        vals = as_polyy(eta, F.p).values(F)
    else:
        vals = np.asarray(eta, dtype=np.int64)
    H = np.unique(vals)
    closed = np.isin(F.add_table[np.ix_(H, H)], H).all()
    if not closed:
        raise ValueError("image is not a subgroup")
    return H


def verify_finite_index(f, eta, s: int, q: int) -> VerifyReport:
    """E_{h in H} ||Delta_h f||_{U^s}^(2^s) <= [G:H] ||f||_{U^{s+1}}^(2^(s+1)) with H = eta(F_q)."""
    if s not in (1, 2, 3):
        raise ValueError("s must be 1, 2 or 3")
    F = field(q)
    v = _vals(f)
    H = _subgroup(eta, F)
    if q % len(H):
        raise ArithmeticError("subgroup order does not divide q")
    index = q // len(H)
    rows = _all_deltas(v, F, 1)[H]
    lhs = float(_gowers_power_batch(rows, s, F).mean())
    rhs = index * gowers_power(v, s + 1, F)
    return VerifyReport.make("finite_index", {"q": q, "s": s, "index": index}, lhs, rhs, index=index)


# Lemma: van der Corput step

def vdc_members(fam: Sequence[PolyY], fs, F: FiniteField, u: int, i0: int):
    """(value table, function) pairs of the shifted family, P_{u,1} first."""
    T = [P.values(F) for P in fam]
    first, rest, shifted = None, [], []
    for i, (P, t, f) in enumerate(zip(fam, T, fs)):
        if d_deg(P) > 1:
            mem = (t, np.conj(f))
            shifted.append((t[F.add_table[u]], f))
        else:
            c = F.sub(t[u], t[0])
            mem = (t, f[F.add_table[:, c]] * np.conj(f))
        if i == i0:
            first = mem
        else:
            rest.append(mem)
    return [first] + rest + shifted


def verify_vdc(family, f_list, q: int, p: int | None = None) -> VerifyReport:
    """||E_y prod f_i(x + P_i(y))||^2 <= E_u ||E_y prod_{j>=2} f_{u,j}(x + (P_{u,j} - P_{u,1})(y))||."""
    F = field(q)
    fam = [as_polyy(P, p or F.p) for P in family]
    if any(P.is_constant() for P in fam) or not essentially_distinct(fam):
        raise ValueError("family must be nonconstant and essentially distinct")
    fs = [_vals(f) for f in f_list]
    if len(fs) != len(fam):
        raise ValueError("one function per polynomial")
    T = [P.values(F) for P in fam]
    lhs = _l2(_avg(F, fs, T, np.ones(q))) ** 2
    i0 = choose_i0(fam)
    rhs_u, expansion = [], 0.0 + 0.0j
    ones = np.ones(q, dtype=np.complex128)
    for u in range(q):
        mem = vdc_members(fam, fs, F, u, i0)
        t1, f1 = mem[0]
        diffs = [F.sub(t, t1) for t, _ in mem[1:]]
        A = _avg(F, [g for _, g in mem[1:]], diffs, ones)
        rhs_u.append(_l2(A))
        expansion += np.mean(f1 * A)
    rhs = float(np.mean(rhs_u))
    gap = abs(expansion / q - lhs)
    return VerifyReport.make(
        "vdc", {"q": q, "family": [str(P) for P in fam]}, lhs, rhs, i0=i0, expansion_gap=gap
    )


# Lemma: degree lowering and its corollary

def degree_lowering_bound(delta: float, eps: float, s: int) -> float:
    """(delta^(2^(2s+4)) / 2^(2^(s+2)) - eps^2) * delta^(2^(s+2)) / 2."""
    return (delta ** (2 ** (2 * s + 4)) / 2.0 ** (2 ** (s + 2)) - eps**2) * delta ** (2 ** (s + 2)) / 2


def verify_degree_lowering(setup: DualSetup, s: int) -> VerifyReport:
    if s not in (0, 1):
        raise ValueError("s must be 0 or 1")
    F = setup.F
    delta = gowers_power(setup.ftilde, s + 2, F) ** (1.0 / 2 ** (s + 2))
    eps = setup.epsilon(s)
    lhs = degree_lowering_bound(delta, eps, s)
    rhs = gowers_power(setup.ftilde, s + 1, F) ** (1.0 / 2 ** (s + 1))
    inst = {"q": F.q, "s": s, "l": setup.l}
    return VerifyReport.make(
        "degree_lowering", inst, lhs, rhs, vacuous=delta < FLOOR, delta=delta, eps=eps, informative=lhs > 0
    )


def us_u1_exponents(s: int) -> tuple[int, int]:
    """(m, n) with ||f~||_{U^s} << ||f~||_{U^1}^(1/m) + eps^(1/n), composed step by step."""
    m, n = 1, 1
    for k in range(1, s):
        mp = 4 ** (k + 1) + 2 ** (k + 1)
        npr = 2 ** (2 * k + 1)
        m, n = m * mp, max(n * mp, npr)
    return m, n


def us_u1_chain(u1: float, eps: Sequence[float], s: int) -> float:
    """Explicit upper bound for ||f~||_{U^s} from ||f~||_{U^1} by repeated degree lowering.

    With A = 4^(k+1) and B = 2^(k+1), degree lowering gives
    U^{k+1} <= max((2^(B+2) U^k)^(1/(A+B)), (2^(B+1) eps_{k-1}^2)^(1/A)).
    """
    b = u1
    for k in range(1, s):
        A, B = 4 ** (k + 1), 2 ** (k + 1)
        b = max((2.0 ** (B + 2) * b) ** (1.0 / (A + B)), (2.0 ** (B + 1) * eps[k - 1] ** 2) ** (1.0 / A))
    return b


def verify_us_u1(setup: DualSetup, s: int) -> VerifyReport:
    if s not in (1, 2, 3):
        raise ValueError("s must be 1, 2 or 3")
    F = setup.F
    us = gowers_power(setup.ftilde, s, F) ** (1.0 / 2**s)
    u1 = gowers_power(setup.ftilde, 1, F) ** 0.5
    eps = [setup.epsilon(k) for k in range(s - 1)]
    rhs = us_u1_chain(u1, eps, s)
    m, n = us_u1_exponents(s)
    ledger = [
        {"k": k, "m_prime": 4 ** (k + 1) + 2 ** (k + 1), "n_prime": 2 ** (2 * k + 1)} for k in range(1, s)
    ]
    return VerifyReport.make(
        "us_u1", {"q": F.q, "s": s, "l": setup.l}, us, rhs, vacuous=us < FLOOR, u1=u1, eps=eps, m=m, n=n, steps=ledger
    )


# main estimate

@dataclass
class MainEstimate:
    family: list
    rows: list
    trends: dict

    @property
    def all_decay(self) -> bool:
        return all(ok for ok, _ in self.trends.values())

    def to_json(self) -> dict:
        return {
            "family": [str(P) for P in self.family],
            "rows": jsonable(self.rows),
            "trends": {k: {"monotone": ok, "inversions": inv} for k, (ok, inv) in self.trends.items()},
            "all_decay": self.all_decay,
        }


def run_main_estimate(
    family,
    q_list,
    ensemble: Sequence[str] = ("sign", "set50", "characters"),
    trials: int = 5,
    seed: int = 0,
    p: int | None = None,
    gowers_budget: float = 2e8,
) -> MainEstimate:
    """delta_2 (largest nontrivial character sum), a delta_1 surrogate and the discrepancy per q.

    delta_1 is the largest residual ||E_y prod f_i(x + P_i(y))|| - C1 ||f_c||_{U^s}^alpha
    over the ensemble, with (C1, s, alpha) from the PET trace.  When U^s is
    too costly a lower-degree norm is used; Gowers norms increase with the
    degree, so the residual then only gets larger.  The "characters" ensemble
    is the single character tuple attaining delta_2, where the discrepancy
    equals delta_2.
    """
    q_list = [int(q) for q in q_list]
    p = p or field(q_list[0]).p
    fam = [as_polyy(P, p) for P in family]
    for e in ensemble:
        if e not in ENSEMBLES:
            raise ValueError(f"unsupported ensemble {e!r}")
    tr = pet_trace(fam, p)
    c = tr.controlled_index
    rows = []
    for q in q_list:
        F = field(q)
        V = np.stack([P.values(F) for P in fam])
        d2, at = character_discrepancy_max(fam, q, V)
        disc, resid = 0.0, 0.0
        s_used = tr.s
        while s_used > 1 and float(q) ** s_used * np.log2(q + 1) > gowers_budget:
            s_used -= 1
        for e in ensemble:
            for t in range(1 if e == "characters" else trials):
                if e == "characters":
                    disc = max(disc, d2)
                    fs = [F.char_values(si) for si in at]
                else:
                    disc = max(disc, _trial_discrepancy(fam, q, e, t, seed, V))
                    rng = np.random.default_rng([seed, q, ENSEMBLES.index(e), t])
                    fs = _ensemble_fns(e, len(fam), q, rng)
                norm = _l2(_avg(F, fs, list(V), np.ones(q)))
                ctrl = tr.c1 * gowers_power(fs[c], s_used, F) ** (1.0 / 2**s_used * float(tr.alpha))
                resid = max(resid, norm - ctrl)
        rows.append({"q": q, "delta1": max(resid, 0.0), "delta2": d2, "discrepancy": disc, "gowers_s": s_used})
    trends = {
        key: monotone_trend([r[key] for r in rows], allowed_inversions=1) for key in ("delta1", "delta2", "discrepancy")
    }
    return MainEstimate(fam, rows, trends)


def _ensemble_fns(e: str, m: int, q: int, rng: np.random.Generator) -> list[np.ndarray]:
    if e == "sign":
        return [rng.choice(np.array([-1.0, 1.0]), size=q).astype(np.complex128) for _ in range(m)]
    dens = 0.25 if e == "set25" else 0.5
    return [(rng.random(q) < dens).astype(np.complex128) for _ in range(m)]


# seeded instance suite

LEMMAS = (
    "multilinear",
    "dual_function",
    "char_family",
    "low_rank",
    "diff_interchange",
    "finite_index",
    "vdc",
    "degree_lowering",
    "us_u1",
)


def _rand_fn(F: FiniteField, rng: np.random.Generator, kind: str | None = None) -> np.ndarray:
    kind = kind or ("phase", "sign", "set", "disc")[int(rng.integers(4))]
    if kind == "phase":
        return np.exp(2j * np.pi * rng.random(F.q))
    if kind == "sign":
        return rng.choice(np.array([-1.0, 1.0]), size=F.q).astype(np.complex128)
    if kind == "set":
        return (rng.random(F.q) < rng.uniform(0.2, 0.8)).astype(np.complex128)
    r = np.sqrt(rng.random(F.q))
    return r * np.exp(2j * np.pi * rng.random(F.q))


def _mean_zero_fn(F: FiniteField, rng: np.random.Generator) -> np.ndarray:
    g = _rand_fn(F, rng)
    g = g - g.mean()
    return g / max(1.0, float(np.abs(g).max()))


def _rand_poly(p: int, rng: np.random.Generator, max_exp: int) -> PolyY:
    while True:
        coeffs = {}
        for e in range(1, max_exp + 1):
            if rng.random() < 0.5:
                c = FpPoly(p, tuple(int(x) for x in rng.integers(p, size=2)))
                if not c.is_zero():
                    coeffs[e] = c
        P = PolyY(p, coeffs)
        if not P.is_constant():
            return P


def _rand_family(p: int, rng: np.random.Generator, m: int, max_exp: int = 4) -> list[PolyY]:
    while True:
        fam = [_rand_poly(p, rng, max_exp) for _ in range(m)]
        if essentially_distinct(fam):
            return fam


def _rand_maps(F: FiniteField, rng: np.random.Generator, m: int) -> list:
    """Half the time polynomial maps over F_q, otherwise arbitrary tables on a random G_2."""
    if rng.random() < 0.5:
        return [P.values(F) for P in _rand_family(F.p, rng, m)]
    n2 = int(rng.integers(4, 2 * F.q + 1))
    return [rng.integers(F.q, size=n2) for _ in range(m)]


def _dual_instance(F: FiniteField, rng: np.random.Generator) -> DualSetup:
    m = int(rng.integers(1, 4))
    l = int(rng.integers(1, m + 1))
    maps = _rand_maps(F, rng, m)
    fs = [(_mean_zero_fn(F, rng) if rng.random() < 0.5 else np.full(F.q, np.exp(2j * np.pi * rng.random()) * rng.random())) for _ in range(l - 1)]
    fs.append(_mean_zero_fn(F, rng) if rng.random() < 0.5 else _rand_fn(F, rng))
    chars = [int(rng.integers(F.q)) for _ in range(m - l)]
    return dual_setup(fs, chars, maps, F.q)


def run_instance(lemma: str, q: int, seed: int, dual_variant: str = "proof") -> VerifyReport:
    """One seeded instance of ``lemma`` on G_1 = F_q; ``dual_variant`` selects the dual-function check."""
    F = field(q)
    rng = np.random.default_rng([seed, q, LEMMAS.index(lemma)])
    if lemma == "multilinear":
        m = int(rng.integers(1, 4))
        l = int(rng.integers(1, m + 1))
        maps = _rand_maps(F, rng, m)
        fs = [_rand_fn(F, rng) * 0.5 + 0.5 * np.exp(2j * np.pi * rng.random()) for _ in range(l)]
        chars = [int(rng.integers(q)) for _ in range(m - l)]
        rep = verify_multilinear(fs, maps, q, chars)
    elif lemma == "dual_function":
        S = _dual_instance(F, rng)
        rep = verify_dual_function(S.fs, S.chars, S.maps, q, variant=dual_variant)
    elif lemma == "char_family":
        s = seed % 3 if q <= 64 else seed % 2
        _, rep = extract_char_family(_rand_fn(F, rng), s, q)
    elif lemma == "low_rank":
        s = 1 + seed % (3 if q <= 16 else 2)
        m = int(rng.integers(0, s + 1))
        phis = [rng.integers(q, size=(q,) * (s - 1)) for _ in range(m)]
        rep = verify_low_rank(_rand_fn(F, rng), phis, s, m, q)
    elif lemma == "diff_interchange":
        q1 = min(q, 16)
        G1 = field(q1) if q1 != q else F
        s = seed % 3
        n2 = int(rng.integers(2, 9))
        f2d = np.stack([_rand_fn(G1, rng) for _ in range(n2)], axis=1)
        fam = CharFamily.random(G1, s, rng)
        H = rng.random((q1,) * s) < rng.uniform(0.3, 1.0)
        rep = verify_diff_interchange(f2d, fam, H, s)
        rep.instance["seed"] = seed
        return rep
    elif lemma == "finite_index":
        s = 1 + seed % 3
        j = int(rng.integers(1, max(2, F.k)))
        coeffs = [int(x) for x in rng.integers(F.p, size=j + 1)]
        coeffs[-1] = coeffs[-1] or 1
        eta = TwistedPoly.from_coeffs(F.p, coeffs)
        rep = verify_finite_index(_rand_fn(F, rng), eta, s, q)
        rep.instance["eta"] = str(eta)
    elif lemma == "vdc":
        m = int(rng.integers(1, 4))
        fam = _rand_family(F.p, rng, m, max_exp=2 * F.p)
        rep = verify_vdc(fam, [_rand_fn(F, rng) for _ in fam], q)
    elif lemma == "degree_lowering":
        rep = verify_degree_lowering(_dual_instance(F, rng), seed % 2)
    elif lemma == "us_u1":
        rep = verify_us_u1(_dual_instance(F, rng), 1 + seed % 3)
    else:
        raise ValueError(f"unknown lemma {lemma!r}")
    rep.instance["seed"] = seed
    return rep


def run_suite(
    q: int = 16,
    seeds: Sequence[int] = range(50),
    lemmas: Sequence[str] = LEMMAS,
    threads: int = 1,
    dual_variant: str = "proof",
) -> list[VerifyReport]:
    """Seeded reports ordered by (lemma, seed) regardless of thread count."""
    from concurrent.futures import ThreadPoolExecutor

    tasks = [(lem, s) for lem in lemmas for s in seeds]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        return list(ex.map(lambda a: run_instance(a[0], q, a[1], dual_variant), tasks))
