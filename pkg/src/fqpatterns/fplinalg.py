"""Row reduction over F_p for small subspaces of F_p^d."""

from __future__ import annotations

import numpy as np


def rref_mod_p(rows, p: int) -> np.ndarray:
    """Reduced row echelon basis (nonzero rows only) of the span of ``rows``."""
    M = np.array(rows, dtype=np.int64) % p
    if M.ndim != 2 or M.size == 0:
        return np.zeros((0, M.shape[-1] if M.ndim == 2 else 0), dtype=np.int64)
    n, d = M.shape
    r = 0
    for c in range(d):
        if r == n:
            break
        piv = np.nonzero(M[r:, c])[0]
        if piv.size == 0:
            continue
        i = r + piv[0]
        if i != r:
            M[[r, i]] = M[[i, r]]
        M[r] = (M[r] * pow(int(M[r, c]), -1, p)) % p
        col = M[:, c].copy()
        col[r] = 0
        nz = np.nonzero(col)[0]
        if nz.size:
            M[nz] = (M[nz] - np.outer(col[nz], M[r])) % p
        r += 1
    return M[:r]


def rank_mod_p(rows, p: int) -> int:
    return int(rref_mod_p(rows, p).shape[0])


class SpanBuilder:
    """Incremental F_p-span with early exit once the whole space is reached."""

    def __init__(self, p: int, d: int):
        self.p = p
        self.d = d
        self.pivots: dict[int, np.ndarray] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def full(self) -> bool:
        return self.rank == self.d

    def reduce(self, v) -> np.ndarray:
        v = np.array(v, dtype=np.int64) % self.p
        for c, row in self.pivots.items():
            if v[c]:
                v = (v - v[c] * row) % self.p
        return v

    def add(self, v) -> bool:
        v = self.reduce(v)
        nz = np.nonzero(v)[0]
        if nz.size == 0:
            return False
        c = int(nz[0])
        v = (v * pow(int(v[c]), -1, self.p)) % self.p
        for k, row in self.pivots.items():
            if row[c]:
                self.pivots[k] = (row - row[c] * v) % self.p
        self.pivots[c] = v
        return True

    def add_many(self, vecs) -> SpanBuilder:
        for v in vecs:
            if self.full:
                break
            self.add(v)
        return self

    def basis(self) -> np.ndarray:
        if not self.pivots:
            return np.zeros((0, self.d), dtype=np.int64)
        return np.array([self.pivots[c] for c in sorted(self.pivots)], dtype=np.int64)
