"""Pointwise algebra of bundle-valued p-forms over an orthonormal frame.

Forms are stored densely over strictly increasing index tuples in
lexicographic order, one fiber vector (length k) per tuple.  Interior
products and wedges with basis covectors are precomputed as signed 0/+-1
tables so that the same code serves single points and whole grids.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import ConfigError, DegreeZero, ShapeMismatch
from .fprofile import FProfile

MAX_DIM = 8
MAX_DEGREE = 4


@lru_cache(maxsize=None)
def index_tuples(m: int, p: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing p-tuples from range(m), lexicographic."""
    return tuple(combinations(range(m), p))


@lru_cache(maxsize=None)
def _tuple_position(m: int, p: int) -> dict:
    return {t: n for n, t in enumerate(index_tuples(m, p))}


def sort_with_sign(idx) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on repeats."""
    idx = list(idx)
    if len(set(idx)) < len(idx):
        return 0, tuple(sorted(idx))
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


@lru_cache(maxsize=None)
def contraction_table(m: int, p: int) -> np.ndarray:
    """C[i, K, I] with (i_{e_i} w)_K = sum_I C[i, K, I] w_I, for p >= 1."""
    lower = _tuple_position(m, p - 1)
    table = np.zeros((m, comb(m, p - 1), comb(m, p)))
    for n, tup in enumerate(index_tuples(m, p)):
        for pos, i in enumerate(tup):
            rest = tup[:pos] + tup[pos + 1:]
            table[i, lower[rest], n] = (-1) ** pos
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def wedge_table(m: int, p: int) -> np.ndarray:
    """D[j, J, I] with (dx^j ^ w)_J = sum_I D[j, J, I] w_I, for p < m."""
    upper = _tuple_position(m, p + 1)
    table = np.zeros((m, comb(m, p + 1), comb(m, p)))
    for n, tup in enumerate(index_tuples(m, p)):
        for j in range(m):
            if j in tup:
                continue
            sign, target = sort_with_sign((j,) + tup)
            table[j, upper[target], n] = sign
    table.setflags(write=False)
    return table


def _check_mp(m: int, p: int) -> None:
    if not 1 <= m <= MAX_DIM:
        raise ConfigError(f"frame dimension must be in [1, {MAX_DIM}]")
    if not 0 <= p <= min(m, MAX_DEGREE):
        raise ConfigError(f"form degree must be in [0, min(m, {MAX_DEGREE})]")


# -- array kernels (trailing axes are (tuple, fiber)) -------------------------

def norm2_array(values: np.ndarray) -> np.ndarray:
    """|w|^2 summed over increasing tuples and fiber components."""
    return np.sum(values * values, axis=(-2, -1))


def contract_array(values: np.ndarray, m: int, p: int) -> np.ndarray:
    """All interior products: result[..., i, K, f] = (i_{e_i} w)_K^f."""
    if p == 0:
        return np.zeros(values.shape[:-2] + (m, 1, values.shape[-1]))
    return np.einsum("iKI,...If->...iKf", contraction_table(m, p), values)


def odot_array(values: np.ndarray, m: int, p: int) -> np.ndarray:
    """(w . w)_ij = <i_{e_i} w, i_{e_j} w>; zero for functions."""
    c = contract_array(values, m, p)
    return np.einsum("...iKf,...jKf->...ij", c, c)


def stress_array(profile: FProfile, values: np.ndarray, m: int, p: int) -> np.ndarray:
    """S = F(|w|^2/2) g - F'(|w|^2/2) (w . w); NaN nodes stay NaN."""
    t = profile.check(0.5 * norm2_array(values))
    F = np.asarray(profile.F(t), dtype=float)
    dF = np.asarray(profile.dF(t), dtype=float)
    S = -dF[..., None, None] * odot_array(values, m, p)
    S += F[..., None, None] * np.eye(m)
    return S


# -- point objects ------------------------------------------------------------

class PointForm:
    """A k-vector-valued p-form at a point.

    Args:
        m: frame dimension.
        p: form degree.
        coeffs: array of shape (C(m, p), k) over ``index_tuples(m, p)``.
    """

    __slots__ = ("m", "p", "k", "coeffs")

    def __init__(self, m: int, p: int, coeffs):
        _check_mp(m, p)
        arr = np.array(coeffs, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] != comb(m, p) or arr.shape[1] < 1:
            raise ShapeMismatch(f"coeffs must have shape ({comb(m, p)}, k), got {arr.shape}")
        arr.setflags(write=False)
        self.m, self.p, self.k, self.coeffs = m, p, arr.shape[1], arr

    @classmethod
    def zeros(cls, m: int, p: int, k: int = 1) -> "PointForm":
        return cls(m, p, np.zeros((comb(m, p), k)))

    @classmethod
    def from_dict(cls, m: int, p: int, entries: dict, k: int = 1) -> "PointForm":
        """Build from {index tuple: fiber vector}; tuples need not be sorted."""
        out = np.zeros((comb(m, p), k))
        pos = _tuple_position(m, p)
        for idx, vec in entries.items():
            sign, key = sort_with_sign(idx)
            if sign == 0:
                continue
            out[pos[key]] += sign * np.broadcast_to(np.asarray(vec, dtype=float), (k,))
        return cls(m, p, out)

    @classmethod
    def random(cls, m: int, p: int, k: int, rng: np.random.Generator,
               scale: float = 1.0) -> "PointForm":
        return cls(m, p, scale * rng.standard_normal((comb(m, p), k)))

    def __call__(self, *idx: int) -> np.ndarray:
        """Fiber vector w(e_{i1}, ..., e_{ip}) for any index tuple."""
        if len(idx) != self.p:
            raise ShapeMismatch(f"expected {self.p} indices, got {len(idx)}")
        sign, key = sort_with_sign(idx)
        if sign == 0:
            return np.zeros(self.k)
        return sign * self.coeffs[_tuple_position(self.m, self.p)[key]]

    def norm2(self) -> float:
        return float(norm2_array(self.coeffs))

    def _like(self, coeffs) -> "PointForm":
        return PointForm(self.m, self.p, coeffs)

    def __add__(self, other: "PointForm") -> "PointForm":
        _match(self, other)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "PointForm") -> "PointForm":
        _match(self, other)
        return self._like(self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "PointForm":
        return self._like(self.coeffs * float(s))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"PointForm(m={self.m}, p={self.p}, k={self.k})"


class SymTensor2:
    """Symmetric 2-tensor in an orthonormal frame; symmetrized on construction."""

    __slots__ = ("m", "entries")

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatch("SymTensor2 needs a square matrix")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self.m, self.entries = a.shape[0], a

    @classmethod
    def metric(cls, m: int) -> "SymTensor2":
        return cls(np.eye(m))

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def __call__(self, X, Y) -> float:
        return float(np.asarray(X, dtype=float) @ self.entries @ np.asarray(Y, dtype=float))

    def __repr__(self) -> str:
        return f"SymTensor2({self.entries.tolist()})"


def _match(a: PointForm, b: PointForm) -> None:
    if (a.m, a.p, a.k) != (b.m, b.p, b.k):
        raise ShapeMismatch(f"forms differ: {(a.m, a.p, a.k)} vs {(b.m, b.p, b.k)}")


def form_inner(a: PointForm, b: PointForm) -> float:
    _match(a, b)
    return float(np.sum(a.coeffs * b.coeffs))


def interior_mult(X, w: PointForm) -> PointForm:
    """i_X w, contracting X into the first slot."""
    if w.p == 0:
        raise DegreeZero("interior product of a 0-form")
    X = np.asarray(X, dtype=float)
    if X.shape != (w.m,):
        raise ShapeMismatch(f"vector must have length {w.m}")
    return PointForm(w.m, w.p - 1, np.einsum("i,iKI,If->Kf", X, contraction_table(w.m, w.p), w.coeffs))


def double_contract(w: PointForm) -> SymTensor2:
    if w.p == 0:
        raise DegreeZero("w . w needs p >= 1")
    return SymTensor2(odot_array(w.coeffs, w.m, w.p))


def stress_energy(profile: FProfile, w: PointForm) -> SymTensor2:
    return SymTensor2(stress_array(profile, w.coeffs, w.m, w.p))


def tensor_inner(T1: SymTensor2, T2: SymTensor2) -> float:
    if T1.m != T2.m:
        raise ShapeMismatch("tensors of different dimension")
    return float(np.sum(T1.entries * T2.entries))


def radial_pairing(profile: FProfile, w: PointForm, h: float, r: float) -> float:
    """<S, Hess(r^2/2)> when Hess(r) = h [g - dr (x) dr] and e_m is radial.

    The last frame direction is taken to be d/dr.
    """
    t = profile.check(0.5 * w.norm2())
    F, dF = float(profile.F(t)), float(profile.dF(t))
    if w.p == 0:
        return F * (1.0 + (w.m - 1) * r * h)
    oo = odot_array(w.coeffs, w.m, w.p)
    tangential = float(np.trace(oo) - oo[-1, -1])
    return F * (1.0 + (w.m - 1) * r * h) - dF * r * h * tangential - dF * float(oo[-1, -1])


def radial_boundary_term(profile: FProfile, w: PointForm, r: float) -> float:
    """S(X, nu) on the sphere of radius r for X = r d/dr, nu = d/dr (last frame slot)."""
    t = profile.check(0.5 * w.norm2())
    F, dF = float(profile.F(t)), float(profile.dF(t))
    if w.p == 0:
        return r * F
    i_r = contract_array(w.coeffs, w.m, w.p)[-1]
    return r * (F - dF * float(np.sum(i_r * i_r)))
