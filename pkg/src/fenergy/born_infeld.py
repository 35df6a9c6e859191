"""Radial Born-Infeld graphs, the plane duality between the two signs, and energy bounds.

The plus equation div(du / sqrt(1 + |du|^2)) = 0 is the critical-point
equation of the bi-plus profile and the minus equation
div(dv / sqrt(1 - |dv|^2)) = 0 that of bi-minus.  For radial solutions both
reduce to the first integral r^(m-1) u' / sqrt(1 +- u'^2) = C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import (ConfigError, DegreeOutOfRange, DomainExceeded, NotASolution,
                     NotSimplyConnectedSupport, SingularRadius)
from .fields import (GridField, GridSpec, el_residual, exterior_d, interior, norm2)
from .fprofile import bi_minus, bi_plus
from .quadrature import ball_volume, simpson, sphere_area, tensor_weights

PLUS = "plus"
MINUS = "minus"
# Edge columns of the dual carry one-sided-stencil error that double
# differencing turns into O(1) noise two nodes in; checks start one node later.
DUAL_MARGIN = 3


def _sign(sign) -> str:
    if sign in (PLUS, "+", 1, "PLUS"):
        return PLUS
    if sign in (MINUS, "-", -1, "MINUS"):
        return MINUS
    raise ConfigError(f"sign must be plus or minus, got {sign!r}")


def radial_slope(m: int, sign: str, C: float, r) -> np.ndarray:
    """u'(r) from the first integral with c_r = C / r^(m-1)."""
    c = C / np.asarray(r, dtype=float) ** (m - 1)
    if _sign(sign) == PLUS:
        with np.errstate(invalid="ignore", divide="ignore"):
            return c / np.sqrt(1.0 - c * c)
    return c / np.sqrt(1.0 + c * c)


@dataclass(frozen=True)
class RadialGraphSolution:
    m: int
    sign: str
    C: float
    r_grid: np.ndarray
    slope: np.ndarray
    u: np.ndarray

    def first_integral(self) -> np.ndarray:
        s = self.slope
        root = np.sqrt(1.0 + s * s) if self.sign == PLUS else np.sqrt(1.0 - s * s)
        return self.r_grid ** (self.m - 1) * s / root

    def first_integral_residual(self) -> np.ndarray:
        return np.abs(self.first_integral() - self.C)

    def u_at(self, r) -> np.ndarray:
        """Piecewise cubic Hermite interpolant of u using the exact slopes."""
        r = np.asarray(r, dtype=float)
        lo, hi = self.r_grid[0], self.r_grid[-1]
        if np.any((r < lo - 1e-12) | (r > hi + 1e-12)):
            raise ConfigError("u_at outside the solved radius range")
        return self.spline(r)

    @cached_property
    def spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.r_grid, self.u, self.slope)


def solve_radial(m: int, sign, C: float, r_range: tuple[float, float], n: int) -> RadialGraphSolution:
    """Radial solution with u(a) = 0 on n nodes of [a, b].

    Slopes are closed form; u accumulates Simpson's rule per interval with
    the exact midpoint slope.
    """
    sign = _sign(sign)
    a, b = map(float, r_range)
    if m < 2:
        raise ConfigError("m must be at least 2")
    if n < 64:
        raise ConfigError("n must be at least 64")
    if not 0 < a < b:
        raise ConfigError("need 0 < a < b")
    if sign == PLUS and C != 0 and a <= abs(C) ** (1.0 / (m - 1)):
        raise SingularRadius(f"plus solution is singular at r = {abs(C) ** (1.0 / (m - 1)):.6g}")
    r = np.linspace(a, b, n)
    s = radial_slope(m, sign, C, r)
    mid = radial_slope(m, sign, C, 0.5 * (r[1:] + r[:-1]))
    steps = np.diff(r) / 6.0 * (s[:-1] + 4.0 * mid + s[1:])
    u = np.concatenate([[0.0], np.cumsum(steps)])
    return RadialGraphSolution(m, sign, float(C), r, s, u)


def slab_grid(sol: RadialGraphSolution, across: int = 8) -> GridSpec:
    """Grid along x^1 with the solver's spacing and ``across`` nodes on the other axes.

    The slab stays inside the solved radius range.
    """
    h = sol.r_grid[1] - sol.r_grid[0]
    half = 0.5 * (across - 1) * h
    lo = sol.r_grid[0] + h
    hi = math.sqrt(max(sol.r_grid[-1] ** 2 - (sol.m - 1) * half * half, 0.0)) - h
    n = int(math.floor((hi - lo) / h)) + 1
    if n < 8:
        raise ConfigError("radius range too short for a slab grid")
    axes = ((lo, lo + (n - 1) * h, n),) + tuple((-half, half, across) for _ in range(sol.m - 1))
    return GridSpec(axes)


def sample_on_grid(sol: RadialGraphSolution, spec: GridSpec,
                   center: Optional[tuple] = None) -> GridField:
    """u(|x - center|) as a 0-form; nodes outside the solved range are NaN."""
    mesh = spec.mesh()
    c = (0.0,) * spec.m if center is None else center
    r = np.sqrt(sum((x - x0) ** 2 for x, x0 in zip(mesh, c)))
    inside = (r >= sol.r_grid[0]) & (r <= sol.r_grid[-1])
    vals = np.full(spec.shape, np.nan)
    vals[inside] = sol.spline(r[inside])
    return GridField(spec, 0, vals[..., None, None])


def profile_for(sign: str):
    return bi_plus() if _sign(sign) == PLUS else bi_minus()


def pde_residual(sol: RadialGraphSolution, across: int = 8) -> float:
    """el_residual of the sampled solution under the matching profile."""
    if sol.m > 3:
        raise ConfigError("grid residuals support m <= 3")
    fld = sample_on_grid(sol, slab_grid(sol, across))
    return el_residual(fld, profile_for(sol.sign))


# -- plane duality -------------------------------------------------------------

def hodge_star_1form(values: np.ndarray) -> np.ndarray:
    """*(a dx + b dy) = a dy - b dx on the oriented plane."""
    out = np.empty_like(values)
    out[..., 0, :] = -values[..., 1, :]
    out[..., 1, :] = values[..., 0, :]
    return out


@dataclass(frozen=True)
class DualityPair:
    omega: GridField
    sigma: GridField
    tau: GridField          # the closed 1-form whose primitive is sigma
    sign: int
    closedness: float       # max interior |d tau|


def _primitive(tau: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Integrate a closed 1-form along the first row, then up each column."""
    x, y = spec.coords()
    # spline antiderivatives keep the O(h^4) error smooth, so differencing
    # sigma again does not amplify it
    row = CubicSpline(x, tau[:, 0, 0]).antiderivative()(x)
    cols = CubicSpline(y, tau[:, :, 1], axis=1).antiderivative()(y)
    return row[:, None] + cols


def dualize(omega: GridField, sign: int = 1) -> DualityPair:
    """sigma with d sigma = sign * *(d omega / sqrt(1 + |d omega|^2)).

    Plane scalars only (m = 2, p = 0).  sigma vanishes at the first grid
    corner.  Masked (NaN) nodes are rejected because the primitive is a
    path integral from that corner.
    """
    if omega.m != 2 or omega.p != 0 or omega.k != 1:
        raise DegreeOutOfRange("duality is implemented for real functions on the plane")
    if sign not in (1, -1):
        raise ConfigError("sign must be +1 or -1")
    if np.any(np.isnan(omega.values)):
        raise NotSimplyConnectedSupport("masked nodes: the support is not a full rectangle")
    dw = exterior_d(omega).values
    W = np.sqrt(1.0 + norm2_values(dw))
    tau = sign * hodge_star_1form(dw / W[..., None, None])
    sigma = _primitive(tau[..., 0], omega.spec)[..., None]
    tau_f = GridField(omega.spec, 1, tau)
    closed = exterior_d(tau_f).values
    res = float(np.max(np.abs(closed[interior(omega.spec)])))
    return DualityPair(omega, GridField(omega.spec, 0, sigma[..., None, :]), tau_f, sign, res)


def norm2_values(values: np.ndarray) -> np.ndarray:
    return np.sum(values * values, axis=(-2, -1))


def recovered_domega(pair: DualityPair) -> GridField:
    """d omega rebuilt from sigma alone.

    Since d sigma = s * *(d omega / W) and ** = -1 on plane 1-forms,
    d omega = -s * *(d sigma) / sqrt(1 - |d sigma|^2).
    """
    ds = exterior_d(pair.sigma).values
    t = norm2_values(ds)
    if np.any(t[~np.isnan(t)] >= 1.0):
        raise DomainExceeded("|d sigma| >= 1: dual field is not spacelike")
    vals = -pair.sign * hodge_star_1form(ds) / np.sqrt(1.0 - t)[..., None, None]
    return GridField(pair.sigma.spec, 1, vals)


@dataclass(frozen=True)
class DualityResiduals:
    norm_relation: float     # |dw|^2 - |ds|^2 / (1 - |ds|^2)
    energy_inequality: float  # max of (1 - sqrt(1-|ds|^2)) - (sqrt(1+|dw|^2) - 1), <= 0 expected
    energy_relation: float   # sqrt(1+|dw|^2) - 1 - (1 - sqrt(1-|ds|^2)) / sqrt(1-|ds|^2)
    roundtrip: float         # max |recovered d omega - d omega|


def dual_el_residual(pair: DualityPair) -> float:
    """Minus-profile residual of sigma; the dual is critical when omega is."""
    return el_residual(pair.sigma, bi_minus(), margin=DUAL_MARGIN)


def duality_residuals(pair: DualityPair, margin: int = DUAL_MARGIN) -> DualityResiduals:
    spec = pair.omega.spec
    core = interior(spec, margin)
    dw = exterior_d(pair.omega).values
    a = norm2_values(dw)
    s = norm2_values(exterior_d(pair.sigma).values)
    plus = np.sqrt(1.0 + a) - 1.0
    minus = 1.0 - np.sqrt(1.0 - s)
    rel6 = a - s / (1.0 - s)
    rel9 = plus - minus / np.sqrt(1.0 - s)
    back = recovered_domega(pair).values - dw
    return DualityResiduals(float(np.max(np.abs(rel6[core]))), float(np.max((minus - plus)[core])),
                            float(np.max(np.abs(rel9[core]))), float(np.max(np.abs(back[core]))))


# -- energies --------------------------------------------------------------------

def _density(t: np.ndarray, sign: str) -> np.ndarray:
    if sign == PLUS:
        return t / (np.sqrt(1.0 + t) + 1.0)
    if np.any(t[~np.isnan(t)] >= 1.0):
        raise DomainExceeded("minus energy needs |d omega|^2 < 1")
    return t / (1.0 + np.sqrt(1.0 - t))


def bi_energy(fld: Union[GridField, RadialGraphSolution], sign=PLUS,
              region: Optional[Callable] = None, r_range: Optional[tuple] = None) -> float:
    """Born-Infeld energy sqrt(1 + |dw|^2) - 1 (plus) or 1 - sqrt(1 - |dw|^2) (minus).

    Args:
        fld: a grid field w (its discrete differential is used) or a radial
            solution (exact slopes, coarea quadrature).
        sign: plus or minus.
        region: for grid fields, a predicate ``region(*mesh) -> bool array``
            restricting the quadrature; NaN nodes are always excluded.
        r_range: for radial solutions, the annulus (a, b); default the solved range.
    """
    sign = _sign(sign)
    if isinstance(fld, RadialGraphSolution):
        a, b = r_range if r_range is not None else (fld.r_grid[0], fld.r_grid[-1])
        if a < fld.r_grid[0] - 1e-12 or b > fld.r_grid[-1] + 1e-12:
            raise ConfigError("r_range outside the solved range")

        def integrand(r):
            s = radial_slope(fld.m, fld.sign, fld.C, r)
            return _density(s * s, sign) * r ** (fld.m - 1)

        return sphere_area(fld.m) * simpson(integrand, a, b, rtol=1e-12)
    dw = exterior_d(fld).values
    dens = _density(norm2_values(dw), sign)
    keep = ~np.isnan(dens)
    if region is not None:
        keep &= np.asarray(region(*fld.spec.mesh()), dtype=bool)
    w = tensor_weights(fld.spec.shape, fld.spec.spacing)
    return float(np.sum(np.where(keep, w * np.nan_to_num(dens), 0.0)))


@dataclass(frozen=True)
class BoundResult:
    E: float
    bound: float
    ok: bool
    el_residual: float


def graph_energy_bound_check(omega: GridField, rho: float, center: Optional[tuple] = None,
                             solution_tol: float = 1e-2) -> BoundResult:
    """Plus energy over the ball of radius rho intersected with {|w| <= rho}.

    The bound is m sqrt(k) |B^m| rho^m with k = C(m, p).
    """
    res = el_residual(omega, bi_plus())
    if not res <= solution_tol:
        raise NotASolution(f"plus residual {res:.3g} exceeds {solution_tol:.3g}")
    m = omega.m
    c = (0.0,) * m if center is None else center
    vals = omega.values

    def region(*mesh):
        r2 = sum((x - x0) ** 2 for x, x0 in zip(mesh, c))
        with np.errstate(invalid="ignore"):
            small = np.all(np.abs(vals) <= rho, axis=(-2, -1))
        return (r2 <= rho * rho) & small

    E = bi_energy(omega, PLUS, region)
    bound = m * math.sqrt(comb(m, omega.p)) * ball_volume(m) * rho ** m
    return BoundResult(E, bound, bool(E <= bound * (1 + 1e-6)), res)


@dataclass(frozen=True)
class PinchingResult:
    holds: bool
    margin: float
    threshold: float


def pinching_threshold(m: int, q: int) -> float:
    if not q < (m - 2) / 2:
        raise DegreeOutOfRange(f"pinching needs q < (m-2)/2 (m = {m}, q = {q})")
    return 1.0 - (q + 1) ** 2 / (m - q - 1) ** 2


def pinching_check(sigma: Union[GridField, np.ndarray], m: Optional[int] = None,
                   q: Optional[int] = None) -> PinchingResult:
    """Pointwise |d sigma|^2 against 1 - (q+1)^2 / (m-q-1)^2.

    Pass a grid field (q is its degree, m its dimension) or an array of
    |d sigma|^2 values together with m and q.
    """
    if isinstance(sigma, GridField):
        m, q = sigma.m, sigma.p
        thr = pinching_threshold(m, q)
        t = norm2(exterior_d(sigma))[interior(sigma.spec)]
    else:
        if m is None or q is None:
            raise ConfigError("array input needs m and q")
        thr = pinching_threshold(m, q)
        t = np.asarray(sigma, dtype=float)
    worst = float(np.nanmax(t)) if t.size else 0.0
    return PinchingResult(bool(worst <= thr), thr - worst, thr)
