"""Boundary-flux estimates of the constant in CMC-type equations and a doubling diagnostic.

For a form w with V = dw / sqrt(1 + |dw|^2) satisfying delta V = c on a
coordinate plane of dimension n = m - p, the flux of V through the sphere of
radius r in that plane equals -c |B^n| r^n.  Since |V| < 1 the flux is at
most n |B^n| r^(n-1), which bounds |c| by n / r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import ConfigError, GridTooSmall, NotSpacelike, ShapeMismatch
from .exterior import _tuple_position, sort_with_sign
from .fields import GridField, exterior_d, norm2
from .geometry import RadialManifold
from .quadrature import ball_volume, simpson, sphere_area

SATISFIED_TOL = 1e-6


@dataclass(frozen=True)
class FluxReport:
    radii: np.ndarray
    c_est: np.ndarray
    bound: np.ndarray
    satisfied: np.ndarray
    extrapolated_c: float
    gamma_sup: Optional[np.ndarray] = None
    growth_slope: Optional[float] = None
    growth_ok: Optional[bool] = None      # None when not applicable

    def rows(self) -> list[tuple]:
        return [(float(r), float(c), float(b), bool(s))
                for r, c, b, s in zip(self.radii, self.c_est, self.bound, self.satisfied)]


FLUX_COLUMNS = ("r", "c_est", "bound", "satisfied")


def _plane(fld: GridField, plane_dims: Optional[Sequence[int]]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    m, n = fld.m, fld.m - fld.p
    if fld.k != 1:
        raise ShapeMismatch("flux checks take real-valued forms")
    if plane_dims is None:
        plane_dims = tuple(range(n))
    plane = tuple(sorted(int(i) for i in plane_dims))
    if len(plane) != n or len(set(plane)) != n or not all(0 <= i < m for i in plane):
        raise ConfigError(f"plane needs {n} distinct axes out of {m}")
    rest = tuple(i for i in range(m) if i not in plane)
    return plane, rest


def _flux_components(V: np.ndarray, fld: GridField, plane, rest) -> np.ndarray:
    """W_a = V(e_a, e_rest...) for each plane axis a; shape (*grid, n)."""
    m, q = fld.m, fld.p + 1
    pos = _tuple_position(m, q)
    comps = []
    for a in plane:
        sign, key = sort_with_sign((a,) + rest)
        comps.append(sign * V[..., pos[key], 0])
    return np.stack(comps, axis=-1)


def _sphere_nodes(n: int, r: float, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points on the unit (n-1)-sphere, their outward normals, and weights summing to |S^{n-1}|."""
    if n == 1:
        pts = np.array([[-1.0], [1.0]])
        return pts, pts, np.array([1.0, 1.0])
    if n == 2:
        k = max(256, int(math.ceil(8 * math.pi * r / h)))
        th = 2 * math.pi * np.arange(k) / k
        pts = np.column_stack([np.cos(th), np.sin(th)])
        return pts, pts, np.full(k, 2 * math.pi / k)
    if n == 3:
        k = max(64, int(math.ceil(4 * math.pi * r / h)))
        z, wz = np.polynomial.legendre.leggauss(k)
        ph = 2 * math.pi * np.arange(2 * k) / (2 * k)
        Z, P = np.meshgrid(z, ph, indexing="ij")
        s = np.sqrt(1 - Z * Z)
        pts = np.column_stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), Z.ravel()])
        w = np.outer(wz, np.full(2 * k, 2 * math.pi / (2 * k))).ravel()
        return pts, pts, w
    raise ConfigError("spheres of dimension above 2 are not supported")


class _Sampler:
    """Interpolates node arrays at physical points (cubic, or linear when NaNs are present)."""

    def __init__(self, fld: GridField):
        self.spec = fld.spec

    def __call__(self, arr: np.ndarray, points: np.ndarray) -> np.ndarray:
        spec = self.spec
        idx = []
        for ax, (lo, hi, n) in enumerate(spec.axes):
            u = (points[:, ax] - lo) / ((hi - lo) / (n - 1))
            if np.any(u < 1) or np.any(u > n - 2):
                raise GridTooSmall("sampling sphere leaves the grid")
            idx.append(u)
        order = 1 if np.any(np.isnan(arr)) else 3
        return map_coordinates(arr, np.array(idx), order=order, mode="nearest")


def _sphere_points(center, plane, r: float, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    unit, normal, w = _sphere_nodes(len(plane), r, h)
    pts = np.tile(np.asarray(center, dtype=float), (unit.shape[0], 1))
    for j, a in enumerate(plane):
        pts[:, a] += r * unit[:, j]
    return pts, normal, w


def _sphere_flux(W: np.ndarray, sampler: _Sampler, center, plane, r: float, h: float) -> tuple[float, np.ndarray]:
    n = len(plane)
    pts, normal, w = _sphere_points(center, plane, r, h)
    flux_density = sum(sampler(W[..., j], pts) * normal[:, j] for j in range(n))
    if np.any(np.isnan(flux_density)):
        raise GridTooSmall("sampling sphere meets masked nodes")
    return float(np.sum(w * flux_density) * r ** (n - 1)), pts


def _extrapolate(radii: np.ndarray, c: np.ndarray) -> float:
    """Least-squares c_inf in c(r) = c_inf + a / r."""
    if radii.size < 2:
        return float(c[0])
    A = np.column_stack([np.ones_like(radii), 1.0 / radii])
    sol, *_ = np.linalg.lstsq(A, c, rcond=None)
    return float(sol[0])


def _prepare(fld: GridField, radii, center):
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ConfigError("radii must be positive and strictly increasing")
    c = np.zeros(fld.m) if center is None else np.asarray(center, dtype=float)
    if c.shape != (fld.m,):
        raise ShapeMismatch("center needs one coordinate per axis")
    return radii, c


def _normalized_V(fld: GridField, sign: int) -> np.ndarray:
    dw = exterior_d(fld).values
    t = norm2(exterior_d(fld))
    if sign > 0:
        return dw / np.sqrt(1.0 + t)[..., None, None]
    return dw / np.sqrt(1.0 - t)[..., None, None]


def cmc_flux(omega: GridField, plane_dims=None, radii: Sequence[float] = (), center=None) -> FluxReport:
    """c_est(r) = -(flux of V through the r-sphere) / (|B^n| r^n) with bound n / r."""
    plane, rest = _plane(omega, plane_dims)
    radii, c0 = _prepare(omega, radii, center)
    n = len(plane)
    W = _flux_components(_normalized_V(omega, +1), omega, plane, rest)
    sampler, h = _Sampler(omega), min(omega.spec.spacing)
    c_est = np.array([-_sphere_flux(W, sampler, c0, plane, r, h)[0] / (ball_volume(n) * r ** n)
                      for r in radii])
    bound = n / radii
    return FluxReport(radii, c_est, bound, np.abs(c_est) <= bound * (1 + SATISFIED_TOL),
                      _extrapolate(radii, c_est))


def punctured_flux(omega: GridField, plane_dims=None, r0: float = 1.0,
                   radii: Sequence[float] = (), center=None, C1: float = 1.0) -> FluxReport:
    """Annulus version: the inner sphere r0 replaces the pole.

    c_est = -(flux(r) - flux(r0)) / (|B^n| (r^n - r0^n)) against
    (C1 2^n r^(n-1) + n r0^(n-1)) / (r^n - r0^n); C1 is the cutoff constant.
    """
    plane, rest = _plane(omega, plane_dims)
    radii, c0 = _prepare(omega, radii, center)
    if not r0 < radii[0]:
        raise ConfigError("r0 must be below every radius")
    n = len(plane)
    W = _flux_components(_normalized_V(omega, +1), omega, plane, rest)
    sampler, h = _Sampler(omega), min(omega.spec.spacing)
    inner = _sphere_flux(W, sampler, c0, plane, r0, h)[0]
    vol = ball_volume(n)
    c_est = np.array([-(_sphere_flux(W, sampler, c0, plane, r, h)[0] - inner) / (vol * (r ** n - r0 ** n))
                      for r in radii])
    bound = (C1 * 2 ** n * radii ** (n - 1) + n * r0 ** (n - 1)) / (radii ** n - r0 ** n)
    return FluxReport(radii, c_est, bound, np.abs(c_est) <= bound * (1 + SATISFIED_TOL),
                      _extrapolate(radii, c_est))


def spacelike_flux(sigma: GridField, plane_dims=None, radii: Sequence[float] = (),
                   center=None) -> FluxReport:
    """Minus-sign flux with bound (n / r) sup 1 / sqrt(1 - |d sigma|^2) on each sphere.

    The growth diagnostic fits the slope of log(gamma / r) against log r;
    a slope at or below -1/2 supports gamma = o(r), anything larger is
    reported as inconclusive (``growth_ok`` False).
    """
    plane, rest = _plane(sigma, plane_dims)
    radii, c0 = _prepare(sigma, radii, center)
    n = len(plane)
    t = norm2(exterior_d(sigma))
    sampler, h = _Sampler(sigma), min(sigma.spec.spacing)
    with np.errstate(invalid="ignore", divide="ignore"):
        V = _normalized_V(sigma, -1)
    W = _flux_components(V, sigma, plane, rest)
    c_est, gamma = [], []
    for r in radii:
        ts = sampler(t, _sphere_points(c0, plane, r, h)[0])
        if np.any(ts >= 1.0):
            raise NotSpacelike(f"|d sigma| >= 1 on the sphere of radius {r:g}")
        flux, _ = _sphere_flux(W, sampler, c0, plane, r, h)
        gamma.append(float(np.max(1.0 / np.sqrt(1.0 - ts))))
        c_est.append(-flux / (ball_volume(n) * r ** n))
    c_est, gamma = np.array(c_est), np.array(gamma)
    bound = n / radii * gamma
    slope = None
    ok = None
    if radii.size >= 2:
        slope = float(np.polyfit(np.log(radii), np.log(gamma / radii), 1)[0])
        ok = slope <= -0.5
    return FluxReport(radii, c_est, bound, np.abs(c_est) <= bound * (1 + SATISFIED_TOL),
                      _extrapolate(radii, c_est), gamma, slope, ok)


@dataclass(frozen=True)
class DoublingResult:
    sup_ratio: float
    bounded: bool
    ratios: np.ndarray


def ball_volume_on(man: RadialManifold, r: float) -> float:
    return sphere_area(man.m) * simpson(man.volume_density, 0.0, r, rtol=1e-13)


def doubling_diagnostic(man: RadialManifold, radii: Sequence[float]) -> DoublingResult:
    """Vol(B_2r) / Vol(B_r) over the radii; bounded when the last decade varies by under 5%."""
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise ConfigError("radii must be positive")
    if 2 * radii.max() >= man.r_max:
        raise ConfigError("2 * max radius must stay below r_max")
    ratios = np.array([ball_volume_on(man, 2 * r) / ball_volume_on(man, r) for r in radii])
    last = ratios[radii >= radii.max() / 10.0]
    bounded = bool((last.max() - last.min()) <= 0.05 * last.min())
    return DoublingResult(float(ratios.max()), bounded, ratios)
