"""Discrete exterior calculus for form fields on rectangular grids.

Derivatives are second-order central differences (one-sided second-order at
the edges) along each coordinate axis, so d and the codifferential are sums
of commuting difference operators and the discrete d o d vanishes to
roundoff.  Nodes outside the domain of a field carry NaN; every residual is
a NaN-aware max over interior nodes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import comb
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DegreeOutOfRange, DegreeZero, ShapeMismatch
from .exterior import (contract_array, contraction_table, index_tuples, norm2_array,
                       odot_array, stress_array, wedge_table)
from .fprofile import FProfile

MARGIN = 2


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid; ``axes`` holds one (min, max, n_points) per axis."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(a), float(b), int(n)) for a, b, n in self.axes)
        object.__setattr__(self, "axes", axes)
        if len(axes) not in (2, 3):
            raise ConfigError("grids are 2- or 3-dimensional")
        for a, b, n in axes:
            if n < 8:
                raise ConfigError("each axis needs at least 8 points")
            if not b > a:
                raise ConfigError("axis max must exceed min")

    @classmethod
    def square(cls, m: int, lo: float, hi: float, n: int) -> "GridSpec":
        return cls(tuple((lo, hi, n) for _ in range(m)))

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n for _, _, n in self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in self.axes)

    def coords(self) -> list[np.ndarray]:
        return [np.linspace(a, b, n) for a, b, n in self.axes]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.coords(), indexing="ij")


class GridField:
    """A k-vector-valued p-form sampled at every node of a grid.

    Args:
        spec: the grid.
        p: form degree.
        values: array of shape (*spec.shape, C(m, p), k).
    """

    def __init__(self, spec: GridSpec, p: int, values):
        m = spec.m
        if not 0 <= p <= m:
            raise DegreeOutOfRange(f"degree {p} outside [0, {m}]")
        v = np.array(values, dtype=float)
        want = spec.shape + (comb(m, p),)
        if v.shape[:-1] != want or v.ndim != m + 2:
            raise ShapeMismatch(f"values must have shape {want + ('k',)}, got {v.shape}")
        v.setflags(write=False)
        self.spec, self.p, self.k, self.values = spec, p, v.shape[-1], v

    @property
    def m(self) -> int:
        return self.spec.m

    @classmethod
    def scalar(cls, spec: GridSpec, fn: Callable) -> "GridField":
        """0-form with k = 1 from ``fn(*mesh)``."""
        vals = np.asarray(fn(*spec.mesh()), dtype=float)
        return cls(spec, 0, np.broadcast_to(vals, spec.shape)[..., None, None])

    @classmethod
    def one_form(cls, spec: GridSpec, components: Sequence[Callable]) -> "GridField":
        """Real 1-form sum_i c_i dx^i from one callable per axis."""
        if len(components) != spec.m:
            raise ShapeMismatch("one component per axis")
        mesh = spec.mesh()
        vals = np.stack([np.broadcast_to(np.asarray(c(*mesh), dtype=float), spec.shape)
                         for c in components], axis=-1)
        return cls(spec, 1, vals[..., None])

    def with_values(self, p: int, values) -> "GridField":
        return GridField(self.spec, p, values)

    def __add__(self, other: "GridField") -> "GridField":
        _same(self, other)
        return self.with_values(self.p, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        _same(self, other)
        return self.with_values(self.p, self.values - other.values)

    def __mul__(self, s: float) -> "GridField":
        return self.with_values(self.p, self.values * float(s))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"GridField(m={self.m}, p={self.p}, k={self.k}, shape={self.spec.shape})"


def _same(a: GridField, b: GridField) -> None:
    if a.spec != b.spec or a.p != b.p or a.k != b.k:
        raise ShapeMismatch("fields differ in grid, degree or fiber")


def partials(arr: np.ndarray, spec: GridSpec) -> list[np.ndarray]:
    """Coordinate derivatives of a node array along each grid axis."""
    m = spec.m
    grads = np.gradient(arr, *spec.spacing, axis=tuple(range(m)), edge_order=2)
    return list(grads)


def interior(spec: GridSpec, margin: int = MARGIN) -> tuple[slice, ...]:
    return tuple(slice(margin, n - margin) for n in spec.shape)


def exterior_d(fld: GridField) -> GridField:
    m, p = fld.m, fld.p
    if p >= m:
        raise DegreeOutOfRange(f"d of a top-degree form (p = {p}, m = {m})")
    D = wedge_table(m, p)
    out = 0.0
    for j, g in enumerate(partials(fld.values, fld.spec)):
        out = out + np.einsum("JI,...If->...Jf", D[j], g)
    return fld.with_values(p + 1, out)


def codifferential(fld: GridField) -> GridField:
    """delta w = -sum_i i_{e_i} (d/dx^i w) for the flat metric."""
    m, p = fld.m, fld.p
    if p == 0:
        raise DegreeZero("codifferential of a 0-form")
    C = contraction_table(m, p)
    out = 0.0
    for i, g in enumerate(partials(fld.values, fld.spec)):
        out = out - np.einsum("KI,...If->...Kf", C[i], g)
    return fld.with_values(p - 1, out)


def norm2(fld: GridField) -> np.ndarray:
    return norm2_array(fld.values)


def stress_field(fld: GridField, profile: FProfile) -> np.ndarray:
    """S_{ij} at every node, shape (*grid, m, m)."""
    return stress_array(profile, fld.values, fld.m, fld.p)


def _covector(spec: GridSpec, comps: np.ndarray) -> GridField:
    return GridField(spec, 1, comps[..., None])


def div_stress(fld: GridField, profile: FProfile) -> GridField:
    """(div S)(e_j) from the structural formula, as a real 1-form.

    Evaluates F' <delta w, i_j w> + F' <i_j dw, w> - <i_{grad F'} w, i_j w>
    with grad F' = F'' grad(|w|^2/2).
    """
    m, p = fld.m, fld.p
    t = profile.check(0.5 * norm2(fld))
    dF = np.asarray(profile.dF(t), dtype=float)
    w = fld.values
    iw = contract_array(w, m, p)                      # (..., j, K, f)
    out = np.zeros(fld.spec.shape + (m,))
    if p >= 1:
        delta = codifferential(fld).values           # (..., K, f)
        out += dF[..., None] * np.einsum("...Kf,...jKf->...j", delta, iw)
        gt = partials(t, fld.spec)
        ddF = np.asarray(profile.second(t), dtype=float)
        grad_dF = np.stack([ddF * g for g in gt], axis=-1)
        out -= np.einsum("...i,...ij->...j", grad_dF, odot_array(w, m, p))
    if p < m:
        dw = exterior_d(fld).values
        idw = contract_array(dw, m, p + 1)            # (..., j, I, f)
        out += dF[..., None] * np.einsum("...jIf,...If->...j", idw, w)
    return _covector(fld.spec, out)


def div_stress_direct(fld: GridField, profile: FProfile) -> GridField:
    """sum_i d/dx^i S_{ij} by differencing the stress field itself."""
    S = stress_field(fld, profile)
    parts = partials(S, fld.spec)
    out = sum(parts[i][..., i, :] for i in range(fld.m))
    return _covector(fld.spec, out)


def interior_max(arr: np.ndarray, spec: GridSpec, margin: int = MARGIN) -> float:
    """NaN-aware max of |arr| over nodes at least ``margin`` from the edge."""
    core = np.abs(arr[interior(spec, margin)])
    if core.size == 0 or np.all(np.isnan(core)):
        return float("nan")
    return float(np.nanmax(core))


def _node_norm(values: np.ndarray) -> np.ndarray:
    return np.sqrt(norm2_array(values))


def conservation_residual(fld: GridField, profile: FProfile, margin: int = MARGIN) -> float:
    """Max over interior nodes of |div S|."""
    return interior_max(_node_norm(div_stress(fld, profile).values), fld.spec, margin)


def field_scale(fld: GridField, margin: int = MARGIN) -> float:
    """max |w|^2 over interior nodes, floored at 1; the unit of conservation residuals."""
    s = interior_max(norm2(fld), fld.spec, margin)
    return max(1.0, s if np.isfinite(s) else 1.0)


def conservation_tolerance(fld: GridField, factor: float = 10.0) -> float:
    """factor * h^2 * scale with h the coarsest spacing."""
    h = max(fld.spec.spacing)
    return factor * h * h * field_scale(fld)


def tension(sigma: GridField, profile: FProfile) -> GridField:
    """tau_F(sigma) = -delta(F'(|d sigma|^2/2) d sigma)."""
    ds = exterior_d(sigma)
    t = profile.check(0.5 * norm2(ds))
    flux = ds.with_values(ds.p, ds.values * np.asarray(profile.dF(t), dtype=float)[..., None, None])
    return codifferential(flux) * -1.0


def el_residual(sigma: GridField, profile: FProfile, target: Optional[GridField] = None,
                margin: int = MARGIN) -> float:
    """Max interior norm of tau_F(sigma), minus ``target`` when given."""
    tau = tension(sigma, profile)
    vals = tau.values if target is None else tau.values - target.values
    return interior_max(_node_norm(vals), sigma.spec, margin)


# -- CSV ---------------------------------------------------------------------

def _column_names(m: int, p: int, k: int) -> list[str]:
    coords = [f"x{i + 1}" for i in range(m)]
    comps = []
    for tup in index_tuples(m, p):
        digits = "".join(str(i + 1) for i in tup)
        comps.extend(f"c{digits}_k{f}" for f in range(k))
    return coords + comps


def field_rows(fld: GridField) -> tuple[list[str], np.ndarray]:
    """Header and a (nodes, columns) array, nodes in C order of the grid."""
    mesh = fld.spec.mesh()
    n = int(np.prod(fld.spec.shape))
    cols = [x.reshape(n) for x in mesh]
    flat = fld.values.reshape(n, -1)
    return _column_names(fld.m, fld.p, fld.k), np.column_stack(cols + [flat])


def write_field_csv(fld: GridField, stream, comment: Optional[str] = None) -> None:
    header, data = field_rows(fld)
    if comment:
        stream.write(f"# {comment}\n")
    stream.write(",".join(header) + "\n")
    for row in data:
        stream.write(",".join(format_float(v) for v in row) + "\n")


def format_float(v: float) -> str:
    return repr(float(v))


def read_field_csv(source) -> GridField:
    """Inverse of :func:`write_field_csv`; accepts a path or text stream."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            return read_field_csv(fh)
    lines = [ln for ln in source if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("".join(lines)))
    header = next(reader)
    data = np.array([[float(x) for x in row] for row in reader])
    m = sum(1 for h in header if h.startswith("x"))
    comps = header[m:]
    if m not in (2, 3) or not comps:
        raise ConfigError("CSV needs x1..xm columns followed by coefficient columns")
    first = comps[0]
    p = len(first[1:first.index("_")])
    k = sum(1 for c in comps if c.startswith(first[:first.index("_") + 1]))
    if _column_names(m, p, k) != header:
        raise ConfigError("CSV header does not match the field column layout")
    axes = []
    for i in range(m):
        u = np.unique(data[:, i])
        axes.append((u[0], u[-1], len(u)))
    spec = GridSpec(tuple(axes))
    if data.shape[0] != int(np.prod(spec.shape)):
        raise ConfigError("CSV rows do not form a full rectangular grid")
    order = np.lexsort(tuple(data[:, i] for i in reversed(range(m))))
    vals = data[order, m:].reshape(spec.shape + (comb(m, p), k))
    return GridField(spec, p, vals)
