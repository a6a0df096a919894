"""Counting polynomial configurations x, x + P_1(y), ..., x + P_m(y) in F_q."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .equidist import char_sum_table
from .fqfield import FiniteField, field, prime_power
from .group_fourier import BOUNDED_TOL
from .poly_structure import PolyY, as_polyy, essentially_distinct

ZERO_TOL = 1e-12
ENSEMBLES = ("sign", "set25", "set50", "characters")


def _family(family, p=None) -> list[PolyY]:
    fam = [as_polyy(P, p) for P in family]
    if not fam:
        raise ValueError("empty family")
    return fam


def _tables(fam: Sequence[PolyY], F: FiniteField) -> np.ndarray:
    return np.stack([P.values(F) for P in fam])


@dataclass
class PatternInstance:
    family: list
    q: int
    sets: list  # boolean arrays A_0, ..., A_m of length q

    def __post_init__(self):
        F = field(self.q)
        self.family = _family(self.family, F.p)
        if len(self.sets) != len(self.family) + 1:
            raise ValueError("need one set per polynomial plus A_0")
        self.sets = [np.asarray(A, dtype=bool) for A in self.sets]
        if any(A.shape != (self.q,) for A in self.sets):
            raise ValueError("set bitsets must have length q")

    @property
    def sizes(self) -> list[int]:
        return [int(A.sum()) for A in self.sets]

    @classmethod
    def random(cls, family, q: int, rng: np.random.Generator, density: float = 0.5) -> PatternInstance:
        m = len(family)
        return cls(family, q, [rng.random(q) < density for _ in range(m + 1)])


def _pattern_matrix(fam, sets, F: FiniteField, V=None) -> np.ndarray:
    """M[x, y] = 1 when x + P_i(y) lies in A_i for every i >= 1 (A_0 not applied)."""
    V = _tables(fam, F) if V is None else V
    M = np.ones((F.q, F.q), dtype=bool)
    for A, row in zip(sets[1:], V):
        M &= A[F.add_table[:, row]]
    return M


def count_patterns(instance: PatternInstance) -> int:
    F = field(instance.q)
    M = _pattern_matrix(instance.family, instance.sets, F)
    return int(M[instance.sets[0]].sum())


def degenerate_y(fam: Sequence[PolyY], F: FiniteField, V=None) -> np.ndarray:
    """Mask of y with a collision among 0, P_1(y), ..., P_m(y)."""
    V = _tables(fam, F) if V is None else V
    bad = np.zeros(F.q, dtype=bool)
    for i in range(len(V)):
        bad |= V[i] == 0
        for j in range(i + 1, len(V)):
            bad |= V[i] == V[j]
    return bad


@dataclass
class NontrivialCount:
    total: int
    degenerate: int
    bound: int
    holds: bool

    @property
    def nontrivial(self) -> int:
        return self.total - self.degenerate


def degenerate_bound_factor(fam: Sequence[PolyY]) -> int:
    """(m + C(m,2)) * d with d the largest y-degree."""
    m = len(fam)
    d = max(P.degree for P in fam)
    return (m + m * (m - 1) // 2) * d


def count_nontrivial(A, family, q: int, p: int | None = None) -> NontrivialCount:
    F = field(q)
    fam = _family(family, p or F.p)
    A = np.asarray(A, dtype=bool)
    V = _tables(fam, F)
    M = _pattern_matrix(fam, [A] * (len(fam) + 1), F, V)[A]
    bad = degenerate_y(fam, F, V)
    total = int(M.sum())
    degen = int(M[:, bad].sum())
    bound = degenerate_bound_factor(fam) * int(A.sum())
    return NontrivialCount(total, degen, bound, degen <= bound)


def main_term(sizes: Sequence[int], q: int, m: int | None = None) -> float:
    """q^-(m-1) * prod |A_i|."""
    return float(main_term_exact(sizes, q, m))


def main_term_exact(sizes: Sequence[int], q: int, m: int | None = None) -> Fraction:
    m = len(sizes) - 1 if m is None else m
    if len(sizes) != m + 1:
        raise ValueError("sizes must list |A_0|, ..., |A_m|")
    return Fraction(math.prod(int(s) for s in sizes)) / Fraction(q) ** (m - 1)


def _check_bounded(f_list):
    for f in f_list:
        if np.any(np.abs(f) > 1 + BOUNDED_TOL):
            raise ValueError("functions must be 1-bounded")


def average_profile(f_list, fam, F: FiniteField, V=None) -> np.ndarray:
    """x -> E_y prod_i f_i(x + P_i(y))."""
    V = _tables(fam, F) if V is None else V
    prod = np.ones((F.q, F.q), dtype=np.complex128)
    for f, row in zip(f_list, V):
        prod *= np.asarray(f)[F.add_table[:, row]]
    return prod.mean(axis=1)


def counting_discrepancy(f_list, family, q: int, p: int | None = None, tables=None) -> float:
    F = field(q)
    fam = _family(family, p or F.p)
    f_list = [np.asarray(getattr(f, "values", f), dtype=np.complex128) for f in f_list]
    if len(f_list) != len(fam):
        raise ValueError("one function per polynomial")
    _check_bounded(f_list)
    avg = average_profile(f_list, fam, F, tables)
    main = np.prod([f.mean() for f in f_list])
    return float(np.sqrt(np.mean(np.abs(avg - main) ** 2)))


@dataclass
class ChainCheck:
    N: int
    main: Fraction
    lhs: float
    rhs: float
    holds: bool


def inequality_chain(instance: PatternInstance) -> ChainCheck:
    """|N - main_term| <= ||1_{A_0}||_2 * q^2 * discrepancy(1_{A_1}, ..., 1_{A_m})."""
    q = instance.q
    N = count_patterns(instance)
    main = main_term_exact(instance.sizes, q)
    disc = counting_discrepancy([A.astype(float) for A in instance.sets[1:]], instance.family, q)
    norm0 = math.sqrt(instance.sizes[0] / q)
    lhs = abs(Fraction(N) - main)
    rhs = norm0 * q * q * disc
    return ChainCheck(N, main, float(lhs), rhs, float(lhs) <= rhs + 1e-9 * q * q)


def density_chain(A, family, q: int, p: int | None = None) -> dict:
    """For a set with no nontrivial pattern: |A|^(m+1)/q^(m-1) <= D|A| + q^(3/2)|A|^(1/2) disc."""
    F = field(q)
    fam = _family(family, p or F.p)
    A = np.asarray(A, dtype=bool)
    cnt = count_nontrivial(A, fam, q)
    m = len(fam)
    a = int(A.sum())
    disc = counting_discrepancy([A.astype(float)] * m, fam, q)
    lhs = float(main_term_exact([a] * (m + 1), q))
    rhs = cnt.degenerate + math.sqrt(a / q) * q * q * disc
    return {
        "size": a,
        "nontrivial": cnt.nontrivial,
        "degenerate": cnt.degenerate,
        "main_term": lhs,
        "rhs": rhs,
        "holds": cnt.nontrivial != 0 or lhs <= rhs + 1e-9 * q * q,
    }


def coset_instance(q: int) -> PatternInstance:
    """Family {y^p - y} with A_0 its image subgroup and A_1 a nontrivial coset."""
    F = field(q)
    P = PolyY.parse("y^p - y", F.p)
    H = np.zeros(q, dtype=bool)
    H[P.values(F)] = True
    c = int(np.flatnonzero(~H)[0])
    A1 = np.zeros(q, dtype=bool)
    A1[F.add(np.flatnonzero(H), c)] = True
    return PatternInstance([P], q, [H, A1])


# exponent fitting

@dataclass
class GammaFit:
    family: list
    q_list: list
    rows: list  # (q, ensemble, trial, discrepancy)
    per_q: list
    gamma: float
    slope: float
    intercept: float
    residuals: list
    exact_zero: bool
    not_good_flag: bool
    witnesses: list = dc_field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "family": [str(P) for P in self.family],
            "q_list": self.q_list,
            "gamma_hat": "inf" if math.isinf(self.gamma) else _fmt(self.gamma),
            "slope": None if math.isinf(self.slope) else _fmt(self.slope),
            "intercept": _fmt(self.intercept),
            "residuals": [_fmt(r) for r in self.residuals],
            "exact_zero": self.exact_zero,
            "not_good_flag": self.not_good_flag,
            "per_q": self.per_q,
            "witnesses": self.witnesses,
        }


def _fmt(x: float) -> float:
    return float(f"{x:.12g}") + 0.0


def _validate_q_list(q_list) -> int:
    if len(q_list) < 3:
        raise ValueError("need at least three field sizes")
    ps = {prime_power(q)[0] for q in q_list}
    if len(ps) != 1:
        raise ValueError("field sizes must share one characteristic")
    if any(b <= a for a, b in zip(q_list, q_list[1:])):
        raise ValueError("field sizes must be strictly increasing")
    return ps.pop()


def _trial_discrepancy(fam, q, ens, trial, seed, V) -> float:
    F = field(q)
    rng = np.random.default_rng([seed, q, ENSEMBLES.index(ens), trial])
    m = len(fam)
    if ens == "sign":
        fs = [rng.choice(np.array([-1.0, 1.0]), size=q) for _ in range(m)]
    else:
        dens = 0.25 if ens == "set25" else 0.5
        fs = [(rng.random(q) < dens).astype(np.float64) for _ in range(m)]
    return counting_discrepancy(fs, fam, q, tables=V)


def character_discrepancy_max(fam, q: int, V=None) -> tuple[float, list[int]]:
    """Max over nontrivial character tuples; the discrepancy there is |E_y prod chi_{s_i}(P_i(y))|."""
    T = np.abs(char_sum_table(fam, q, tables=V)).ravel()
    T[0] = 0.0
    i = int(np.argmax(T))
    return float(T[i]), [int(x) for x in np.unravel_index(i, (q,) * len(fam))]


def fit_gamma(
    family,
    q_list,
    ensemble: Sequence[str] = ENSEMBLES,
    trials: int = 20,
    seed: int = 0,
    threads: int = 1,
    p: int | None = None,
) -> GammaFit:
    q_list = [int(q) for q in q_list]
    p0 = _validate_q_list(q_list)
    fam = _family(family, p or p0)
    if not essentially_distinct(fam):
        raise ValueError("family is not essentially distinct")
    for e in ensemble:
        if e not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {e!r}")
    rows, per_q, witnesses = [], [], []
    tables = {q: _tables(fam, field(q)) for q in q_list}
    tasks = [(q, e, t) for q in q_list for e in ensemble if e != "characters" for t in range(trials)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        vals = list(ex.map(lambda a: _trial_discrepancy(fam, a[0], a[1], a[2], seed, tables[a[0]]), tasks))
    by_q: dict[int, list] = {q: [] for q in q_list}
    for (q, e, t), v in zip(tasks, vals):
        rows.append((q, e, t, _fmt(v)))
        by_q[q].append(v)
    for q in q_list:
        F = field(q)
        if "characters" in ensemble and q <= F.p**6 and q ** len(fam) <= 1 << 22:
            v, at = character_discrepancy_max(fam, q, tables[q])
            rows.append((q, "characters", 0, _fmt(v)))
            by_q[q].append(v)
            witnesses.append({"q": q, "s": at, "discrepancy": _fmt(v)})
        per_q.append({"q": q, "max_discrepancy": _fmt(max(by_q[q]))})
    rows.sort(key=lambda r: (r[0], ENSEMBLES.index(r[1]), r[2]))
    maxima = np.array([max(by_q[q]) for q in q_list])
    logs_q = np.log(np.array(q_list, dtype=np.float64))
    exact_zero = bool(np.all(maxima <= ZERO_TOL))
    if exact_zero or np.any(maxima <= ZERO_TOL):
        slope, intercept, resid, gamma = -math.inf, 0.0, [0.0] * len(q_list), math.inf
    else:
        y = np.log(maxima)
        A = np.vstack([logs_q, np.ones_like(logs_q)]).T
        (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = (y - (slope * logs_q + intercept)).tolist()
        gamma = -float(slope)
    not_good = bool(np.all(np.abs(maxima - 1.0) <= 1e-9))
    return GammaFit(fam, q_list, rows, per_q, gamma, float(slope), float(intercept), resid, exact_zero, not_good, witnesses)


def monotone_trend(values: Sequence[float], allowed_inversions: int = 1) -> tuple[bool, int]:
    inv = sum(1 for a, b in zip(values, values[1:]) if b > a)
    return inv <= allowed_inversions, inv
