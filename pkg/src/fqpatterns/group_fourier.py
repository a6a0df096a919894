"""Fourier analysis and Gowers uniformity norms on (F_q, +)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .fpt_ring import FqElem, Modulus
from .fqfield import FiniteField, field

BOUNDED_TOL = 1e-12
MAX_GOWERS_S = 6
GOWERS_BUDGET = 1e11
_CHUNK_ELEMS = 1 << 22


def _as_field(F) -> FiniteField:
    if isinstance(F, FiniteField):
        return F
    if isinstance(F, int):
        return field(F)
    return FiniteField(F)


@dataclass(frozen=True, eq=False)
class GroupFn:
    """A complex function on F_q, stored by element index."""

    F: FiniteField
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.F.q,):
            raise ValueError(f"expected {self.F.q} values, got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> int:
        return self.F.q

    @property
    def modulus(self) -> Modulus:
        return self.F.modulus

    def is_one_bounded(self) -> bool:
        return bool(np.all(np.abs(self.values) <= 1 + BOUNDED_TOL))

    def mean(self) -> complex:
        return complex(self.values.mean())

    def __mul__(self, other: GroupFn) -> GroupFn:
        return GroupFn(self.F, self.values * other.values)

    def conj(self) -> GroupFn:
        return GroupFn(self.F, np.conj(self.values))

    # constructors
    @classmethod
    def constant(cls, F, c: complex = 1.0) -> GroupFn:
        F = _as_field(F)
        return cls(F, np.full(F.q, c, dtype=np.complex128))

    @classmethod
    def character(cls, F, s: int) -> GroupFn:
        F = _as_field(F)
        return cls(F, F.char_values(int(s)))

    @classmethod
    def indicator(cls, F, members) -> GroupFn:
        F = _as_field(F)
        v = np.zeros(F.q, dtype=np.complex128)
        v[np.asarray(members, dtype=np.int64)] = 1
        return cls(F, v)

    @classmethod
    def random_sign(cls, F, rng: np.random.Generator) -> GroupFn:
        F = _as_field(F)
        return cls(F, rng.choice(np.array([-1.0, 1.0]), size=F.q))

    @classmethod
    def random_set(cls, F, density: float, rng: np.random.Generator) -> GroupFn:
        F = _as_field(F)
        return cls(F, (rng.random(F.q) < density).astype(np.float64))

    @classmethod
    def random_phase(cls, F, rng: np.random.Generator) -> GroupFn:
        F = _as_field(F)
        return cls(F, np.exp(2j * np.pi * rng.random(F.q)))

    # csv
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, z in enumerate(self.values):
            w.writerow([i, repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, F, text: str) -> GroupFn:
        F = _as_field(F)
        v = np.zeros(F.q, dtype=np.complex128)
        seen = np.zeros(F.q, dtype=bool)
        for row in csv.DictReader(io.StringIO(text)):
            i = int(row["index"])
            v[i] = complex(float(row["re"]), float(row["im"]))
            seen[i] = True
        if not seen.all():
            raise ValueError("csv does not define every element")
        return cls(F, v)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, GroupFn) else np.asarray(f, dtype=np.complex128)


def _field_of(f, F=None) -> FiniteField:
    if isinstance(f, GroupFn):
        return f.F
    if F is None:
        raise ValueError("a field is required for raw arrays")
    return _as_field(F)


# Fourier transform

@dataclass(frozen=True, eq=False)
class Spectrum:
    """``coeffs[s]`` = E_x f(x) conj chi_s(x)."""

    F: FiniteField
    coeffs: np.ndarray

    def parseval_gap(self, f) -> float:
        return abs(float(np.sum(np.abs(self.coeffs) ** 2)) - float(np.mean(np.abs(_values(f)) ** 2)))

    def l4_power(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 4))


def fft_raw(values: np.ndarray, F: FiniteField) -> np.ndarray:
    """Unnormalized (Z/p)^k DFT along the last axis, frequency in digit order."""
    lead = values.shape[:-1]
    cube = values.reshape(lead + (F.p,) * F.k)
    axes = tuple(range(len(lead), len(lead) + F.k))
    return np.fft.fftn(cube, axes=axes).reshape(lead + (F.q,))


def fourier(f, mode: str = "fast", F=None) -> Spectrum:
    F = _field_of(f, F)
    if not F.modulus.is_irreducible:
        raise ValueError("Fourier analysis needs a field modulus")
    v = _values(f)
    if mode == "naive":
        coeffs = np.conj(F.char_matrix) @ v / F.q
    elif mode == "fast":
        coeffs = fft_raw(v, F)[..., F.dual_perm] / F.q
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Spectrum(F, coeffs)


def inverse_fourier(spec: Spectrum) -> GroupFn:
    """f(x) = sum_s fhat(s) chi_s(x)."""
    F = spec.F
    digit_order = np.empty(F.q, dtype=np.complex128)
    digit_order[F.dual_perm] = spec.coeffs
    cube = digit_order.reshape((F.p,) * F.k)
    v = np.fft.ifftn(cube).reshape(F.q) * F.q
    return GroupFn(F, v)


# differencing

def _h_index(h, F: FiniteField) -> int:
    if isinstance(h, FqElem):
        return F.index_of(h)
    return int(h)


def translate(f: GroupFn, a) -> GroupFn:
    """x -> f(x + a)."""
    a = _h_index(a, f.F)
    return GroupFn(f.F, f.values[f.F.add_table[a]])


def modulate(f: GroupFn, s: int) -> GroupFn:
    return GroupFn(f.F, f.values * f.F.char_values(int(s)))


def delta(f: GroupFn, h) -> GroupFn:
    """Delta_h f(x) = f(x + h) conj f(x); a tuple h applies the coordinates in turn."""
    if isinstance(h, (tuple, list)):
        for hi in h:
            f = delta(f, hi)
        return f
    hi = _h_index(h, f.F)
    v = f.values
    return GroupFn(f.F, v[f.F.add_table[hi]] * np.conj(v))


def delta_all(values: np.ndarray, F: FiniteField) -> np.ndarray:
    """D[..., h, x] = Delta_h f(x) for a batch of functions along the last axis."""
    v = np.asarray(values)
    return v[..., F.add_table] * np.conj(v)[..., None, :]


# Gowers norms

def _gowers_power_batch(rows: np.ndarray, s: int, F: FiniteField) -> np.ndarray:
    """||row||_{U^s}^(2^s) for each row of a (B, q) array."""
    if s == 1:
        return np.abs(rows.mean(axis=-1)) ** 2
    if s == 2:
        return np.sum(np.abs(fft_raw(rows, F)) ** 4, axis=-1) / F.q**4
    B, q = rows.shape
    per = max(1, _CHUNK_ELEMS // (q * q))
    out = np.empty(B, dtype=np.float64)
    for lo in range(0, B, per):
        block = rows[lo : lo + per]
        D = delta_all(block, F).reshape(-1, q)
        out[lo : lo + per] = _gowers_power_batch(D, s - 1, F).reshape(len(block), q).mean(axis=1)
    return out


def gowers_power(f, s: int, F=None) -> float:
    """||f||_{U^s}^(2^s), clamped at 0 from tiny negative rounding."""
    F = _field_of(f, F)
    if not 1 <= s <= MAX_GOWERS_S:
        raise ValueError(f"Gowers degree s={s} outside 1..{MAX_GOWERS_S}")
    if float(F.q) ** s * np.log2(F.q + 1) > GOWERS_BUDGET:
        raise ValueError(f"U^{s} on F_{F.q} exceeds the compute budget")
    val = float(_gowers_power_batch(_values(f)[None, :], s, F)[0])
    if val < 0:
        if val < -1e-12:
            raise ArithmeticError(f"negative Gowers power {val}")
        val = 0.0
    return val


def gowers_norm(f, s: int, F=None) -> float:
    return gowers_power(f, s, F) ** (1.0 / 2**s)


def u2_fourier_identity(f, F=None) -> tuple[float, float]:
    """(||f||_{U^2}^4 by the differencing recursion, sum |fhat|^4)."""
    F = _field_of(f, F)
    v = _values(f)
    D = delta_all(v, F)
    lhs = float(np.mean(np.abs(D.mean(axis=1)) ** 2))
    rhs = fourier(v, F=F).l4_power()
    return lhs, rhs
