"""Ball energies of rotationally symmetric fields and the monotonicity experiments.

A :class:`RadialField` stores its coefficients in the adapted orthonormal
frame {e_1, ..., e_{m-1}, d/dr}; the last frame slot is always radial.  Ball
energies reduce to one-dimensional integrals by the coarea formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (ConfigError, ConservationPrecheckFailed, OutOfRegimeRange,
                     SpanTooShort)
from .exterior import PointForm, contract_array, norm2_array, odot_array
from .fields import GridField, conservation_residual, conservation_tolerance, div_stress, stress_field
from .fprofile import FProfile, f_degree
from .geometry import POLY_NEG, CurvatureRegime, ExponentResult, RadialManifold, vanishing_exponent
from .parallel import pmap
from .quadrature import simpson, sphere_area, tensor_weights

R_START = 1e-8
ENERGY_RTOL = 1e-8
MONOTONE_SLACK = 1e-8
RADIAL_PRECHECK_TOL = 1e-4


@dataclass(frozen=True)
class RadialField:
    """A p-form on a model manifold whose frame coefficients depend on r only.

    Args:
        man: the model manifold.
        p: form degree.
        k: fiber dimension.
        coeffs: map from an array of radii (n,) to coefficients (n, C(m, p), k).
        name: label used in reports.
        conservative: set when the caller knows analytically that the field
            satisfies the conservation law, which skips the numeric precheck.
    """

    man: RadialManifold
    p: int
    k: int
    coeffs: Callable[[np.ndarray], np.ndarray]
    name: str = "radial"
    conservative: bool = False

    def values(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        v = np.asarray(self.coeffs(r), dtype=float)
        want = (r.size, comb(self.man.m, self.p), self.k)
        if v.shape != want:
            raise ConfigError(f"{self.name}: coefficients have shape {v.shape}, expected {want}")
        return v

    def amplitude(self, r: float) -> PointForm:
        return PointForm(self.man.m, self.p, self.values(r)[0])

    def norm2(self, r) -> np.ndarray:
        return norm2_array(self.values(r))

    def radial_contraction_norm2(self, r) -> np.ndarray:
        """|i_{d/dr} w|^2."""
        if self.p == 0:
            return np.zeros(np.atleast_1d(r).shape)
        c = contract_array(self.values(r), self.man.m, self.p)[:, -1]
        return np.sum(c * c, axis=(-2, -1))


# -- presets -------------------------------------------------------------------

def constant_form(man: RadialManifold, value: float = 1.0, radial: bool = True,
                  name: Optional[str] = None) -> RadialField:
    """value * dr (radial) or value * e^1 (tangential) as a real 1-form."""
    m = man.m
    slot = m - 1 if radial else 0

    def coeffs(r):
        out = np.zeros((r.size, m, 1))
        out[:, slot, 0] = value
        return out

    return RadialField(man, 1, 1, coeffs, name or ("const-dr" if radial else "const-tangential"))


def zero_form(man: RadialManifold, p: int = 1, k: int = 1) -> RadialField:
    n = comb(man.m, p)
    return RadialField(man, p, k, lambda r: np.zeros((r.size, n, k)), "zero", conservative=True)


def linear_coordinate(man: RadialManifold) -> RadialField:
    """Energy profile of du for u = x^1 on flat space.

    |du| = 1 everywhere, so every ball energy equals that of a unit-norm
    form; the field is stored as the unit radial covector, which has the
    same density.  du is parallel, hence conservative for every profile.
    Only the energy (not the pointwise direction) is meaningful here.
    """
    base = constant_form(man, 1.0, radial=True, name="linear-coordinate")
    return RadialField(man, 1, 1, base.coeffs, "linear-coordinate", conservative=True)


def equivariant_harmonic(man: RadialManifold, r_max: float, r0: float = 1e-3) -> RadialField:
    """du for the harmonic map u = g(r) x/|x| into R^m, with g(0) = 0, g'(0) = 1.

    g solves g'' + (m-1)(f'/f) g' - (m-1) g / f^2 = 0.  The series start
    g = r + c3 r^3 uses f = r + f3 r^3, f3 = -K(0)/6.  On flat space g = r.
    The differential is e_i -> (g/f) eps_i on the sphere and d/dr -> g' eps_m,
    so k = m and |du|^2 = (m-1)(g/f)^2 + g'^2.
    """
    m = man.m
    if r_max >= man.r_max:
        raise ConfigError("r_max beyond the manifold's radius")
    # f''/f -> 6 f3 at the pole
    f3 = float(man.warp_d2(r0) / man.warp(r0)) / 6.0
    c3 = -2.0 * (m - 1) * f3 / (m + 2)

    def rhs(r, y):
        f, fp = float(man.warp(r)), float(man.warp_d1(r))
        return [y[1], -(m - 1) * fp / f * y[1] + (m - 1) * y[0] / (f * f)]

    y0 = [r0 + c3 * r0 ** 3, 1.0 + 3 * c3 * r0 ** 2]
    sol = solve_ivp(rhs, (r0, r_max), y0, method="DOP853", rtol=1e-12, atol=1e-14,
                    dense_output=True)
    if not sol.success:
        raise ConfigError(f"equivariant ODE failed: {sol.message}")

    def coeffs(r):
        r = np.asarray(r, dtype=float)
        inner = r < r0
        rr = np.where(inner, r0, r)
        g, gp = sol.sol(rr)
        g = np.where(inner, r + c3 * r ** 3, g)
        gp = np.where(inner, 1.0 + 3 * c3 * r ** 2, gp)
        out = np.zeros((r.size, m, m))
        ratio = g / man.warp(r)
        for i in range(m - 1):
            out[:, i, i] = ratio
        out[:, m - 1, m - 1] = gp
        return out

    return RadialField(man, 1, m, coeffs, f"equivariant-harmonic({man.name})")


# -- energies ------------------------------------------------------------------

def energy_density(fld: RadialField, profile: FProfile, r) -> np.ndarray:
    t = profile.check(0.5 * fld.norm2(r))
    return np.asarray(profile.F(t), dtype=float)


def ball_energy(fld: RadialField, profile: FProfile, rho: float, r_inner: float = 0.0,
                rtol: float = ENERGY_RTOL) -> float:
    """|S^{m-1}| * int_{r_inner}^{rho} F(|w|^2/2) f^{m-1} dr by doubling Simpson."""
    man = fld.man
    if not 0 < rho < man.r_max:
        raise ConfigError("ball_energy needs 0 < rho < r_max")
    a = max(R_START, r_inner)
    if rho <= a:
        return 0.0

    def integrand(r):
        return energy_density(fld, profile, r) * man.volume_density(r)

    return sphere_area(man.m) * simpson(integrand, a, rho, rtol=rtol, atol=1e-300)


def sphere_energy(fld: RadialField, profile: FProfile, rho: float) -> float:
    """dE/drho: the energy density integrated over the sphere of radius rho."""
    man = fld.man
    return float(sphere_area(man.m) * man.volume_density(rho) * energy_density(fld, profile, rho)[0])


def radial_stress(fld: RadialField, profile: FProfile, r) -> tuple[np.ndarray, np.ndarray]:
    """(S(d/dr, d/dr), mean tangential diagonal entry) of the stress tensor."""
    v = fld.values(r)
    m, p = fld.man.m, fld.p
    t = profile.check(0.5 * norm2_array(v))
    F, dF = np.asarray(profile.F(t)), np.asarray(profile.dF(t))
    oo = odot_array(v, m, p)
    a = F - dF * oo[:, -1, -1]
    b = F - dF * np.trace(oo[:, :-1, :-1], axis1=1, axis2=2) / (m - 1)
    return a, b


def radial_conservation_residual(fld: RadialField, profile: FProfile, r_lo: float, r_hi: float,
                                 n: int = 4001) -> float:
    """Relative size of a' + (m-1)(f'/f)(a - b), the radial part of div S.

    Valid for stress tensors that are diagonal and isotropic on the spheres,
    which holds for every preset here.
    """
    r = np.linspace(r_lo, r_hi, n)
    a, b = radial_stress(fld, profile, r)
    h = fld.man.warp_d1(r) / fld.man.warp(r)
    da = np.gradient(a, r, edge_order=2)
    curv = (fld.man.m - 1) * h * (a - b)
    core = slice(2, -2)
    # floor at a small fraction of the stress size so a constant stress does not score ODE noise
    floor = 1e-6 * np.max(np.abs(a[core]) + np.abs(b[core])) / (r_hi - r_lo)
    scale = max(float(np.max(np.abs(da[core]) + np.abs(curv[core]))), floor, 1e-300)
    return float(np.max(np.abs(da + curv)[core]) / scale)


# -- monotonicity ---------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    radii: np.ndarray
    energies: np.ndarray
    ratios: np.ndarray
    lam: float
    monotone: bool
    worst_violation: float
    dE_drho: np.ndarray
    lower_bound: np.ndarray          # lambda / rho * E
    differential_ok: bool
    zero_energy: np.ndarray          # radii where E vanishes
    exponent: ExponentResult
    base_radius: float = 0.0

    def rows(self) -> list[tuple]:
        return [(float(r), float(e), float(q), float(d), float(lb))
                for r, e, q, d, lb in zip(self.radii, self.energies, self.ratios,
                                          self.dE_drho, self.lower_bound)]


REPORT_COLUMNS = ("rho", "E", "ratio", "dE_drho", "lower_bound_lambda_over_rho")


def conservation_precheck(fld: RadialField, profile: FProfile, radii,
                          sample: Optional[GridField] = None) -> float:
    """Return the residual used to admit ``fld``; raise if it fails.

    With a grid ``sample`` the residual is the grid conservation residual
    against 10 h^2 scale.  Otherwise, unless the field is flagged
    conservative, the radial residual must stay below 1e-4.
    """
    if sample is not None:
        res = conservation_residual(sample, profile)
        tol = conservation_tolerance(sample)
        if not res <= tol:
            raise ConservationPrecheckFailed(
                f"conservation residual {res:.3g} exceeds {tol:.3g}")
        return res
    if fld.conservative:
        return 0.0
    lo, hi = float(np.min(radii)), float(np.max(radii))
    res = radial_conservation_residual(fld, profile, max(lo / 2, 1e-3), hi)
    if not res <= RADIAL_PRECHECK_TOL:
        raise ConservationPrecheckFailed(f"radial conservation residual {res:.3g}")
    return res


def monotonicity_experiment(fld: RadialField, profile: FProfile, regime: CurvatureRegime,
                            radii: Sequence[float], p: Optional[int] = None,
                            sample: Optional[GridField] = None,
                            slack: float = MONOTONE_SLACK) -> MonotonicityReport:
    """Energies, ratios E/rho^lambda and the differential test rho E' >= lambda E.

    Under the polynomial-decay regime the energies are taken over the
    annulus between radius 1 and rho and the exponent is 1 + delta.
    """
    p = fld.p if p is None else p
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise ConfigError("radii must be strictly increasing with at least two entries")
    expo = vanishing_exponent(regime, fld.man.m, p, f_degree(profile))
    base = 0.0
    if regime.case_tag == POLY_NEG:
        if radii[0] < 1:
            raise OutOfRegimeRange("annulus energies need radii >= 1")
        base = 1.0
    conservation_precheck(fld, profile, radii, sample)
    lam = expo.exponent
    E = np.array(pmap(lambda r: ball_energy(fld, profile, r, r_inner=base), radii))
    dE = np.array([sphere_energy(fld, profile, r) for r in radii])
    ratios = E / radii ** lam
    prev, nxt = ratios[:-1], ratios[1:]
    drop = np.where(prev > 0, (prev - nxt) / np.where(prev > 0, prev, 1.0), 0.0)
    worst = float(max(0.0, np.max(drop)))
    lower = lam / radii * E
    diff_ok = bool(np.all(radii * dE >= lam * E * (1 - slack) - 1e-300))
    return MonotonicityReport(radii, E, ratios, lam, bool(worst <= slack), worst, dE, lower,
                              diff_ok, radii[E == 0], expo, base)


def grid_ball_energies(fld: GridField, profile: FProfile, radii, center=None) -> np.ndarray:
    """Trapezoid energies of a flat grid field over balls (first-order in h at the rim)."""
    t = profile.check(0.5 * norm2_array(fld.values))
    dens = np.nan_to_num(np.asarray(profile.F(t), dtype=float))
    mesh = fld.spec.mesh()
    c = np.zeros(fld.m) if center is None else np.asarray(center, dtype=float)
    r2 = sum((x - x0) ** 2 for x, x0 in zip(mesh, c))
    wd = tensor_weights(fld.spec.shape, fld.spec.spacing) * dens
    return np.array([float(np.sum(wd[r2 <= r * r])) for r in np.asarray(radii, dtype=float)])


def grid_monotonicity_experiment(fld: GridField, profile: FProfile, regime: CurvatureRegime,
                                 radii: Sequence[float], center=None,
                                 slack: float = MONOTONE_SLACK) -> MonotonicityReport:
    """Flat-space monotonicity test for a sampled field; the field is its own precheck sample."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise ConfigError("radii must be strictly increasing with at least two entries")
    expo = vanishing_exponent(regime, fld.m, fld.p, f_degree(profile))
    res = conservation_residual(fld, profile)
    tol = conservation_tolerance(fld)
    if not res <= tol:
        raise ConservationPrecheckFailed(f"conservation residual {res:.3g} exceeds {tol:.3g}")
    lam = expo.exponent
    E = grid_ball_energies(fld, profile, radii, center)
    dE = np.gradient(E, radii)
    ratios = E / radii ** lam
    prev, nxt = ratios[:-1], ratios[1:]
    drop = np.where(prev > 0, (prev - nxt) / np.where(prev > 0, prev, 1.0), 0.0)
    worst = float(max(0.0, np.max(drop)))
    lower = lam / radii * E
    diff_ok = bool(np.all(radii * dE >= lam * E * (1 - slack)))
    return MonotonicityReport(radii, E, ratios, lam, bool(worst <= slack), worst, dE, lower,
                              diff_ok, radii[E == 0], expo)


def boundary_condition_check(fld: RadialField, profile: FProfile, radius: float = 1.0) -> bool:
    """Sign of F - F' |i_{d/dr} w|^2 on the unit sphere (rotationally symmetric)."""
    t = profile.check(0.5 * fld.norm2(radius))
    val = profile.F(t) - profile.dF(t) * fld.radial_contraction_norm2(radius)
    return bool(float(np.asarray(val).ravel()[0]) >= -1e-12)


# -- Stokes identity on a box ------------------------------------------------------

@dataclass(frozen=True)
class StokesResult:
    lhs: float
    rhs: float
    rel_err: float
    box: tuple


def _snap(coord: np.ndarray, lo: float, hi: float) -> tuple[int, int]:
    i0 = int(np.argmin(np.abs(coord - lo)))
    i1 = int(np.argmin(np.abs(coord - hi)))
    return i0, i1


def stokes_identity_check(fld: GridField, profile: FProfile, box=None) -> StokesResult:
    """Boundary flux of S(X, nu) against the volume integral of tr S + (div S)(X).

    X is the position field, whose covariant derivative is the identity, so
    <S, grad theta_X> = tr S.  The box is snapped to grid nodes.  rel_err is
    measured against the total absolute mass of both sides, which stays
    meaningful when both sides vanish identically.
    """
    spec, m = fld.spec, fld.m
    coords = spec.coords()
    if box is None:
        box = tuple((c[len(c) // 4], c[-1 - len(c) // 4]) for c in coords)
    if len(box) != m:
        raise ConfigError("box needs one (lo, hi) pair per axis")
    idx = [_snap(c, lo, hi) for c, (lo, hi) in zip(coords, box)]
    for (i0, i1), c in zip(idx, coords):
        if not (1 <= i0 < i1 <= len(c) - 2):
            raise ConfigError("box must lie strictly inside the grid")
    sl = tuple(slice(i0, i1 + 1) for i0, i1 in idx)
    S = stress_field(fld, profile)[sl]
    div = div_stress(fld, profile).values[..., 0][sl]
    X = np.stack([x[sl] for x in spec.mesh()], axis=-1)
    vol_w = tensor_weights(S.shape[:m], spec.spacing)
    vol = np.trace(S, axis1=-2, axis2=-1) + np.sum(div * X, axis=-1)
    rhs = float(np.sum(vol_w * vol))
    mass = float(np.sum(vol_w * np.abs(vol)))
    lhs = 0.0
    for a in range(m):
        other = [b for b in range(m) if b != a]
        face_w = tensor_weights(tuple(S.shape[b] for b in other),
                                tuple(spec.spacing[b] for b in other))
        for end, sign in ((0, -1.0), (-1, 1.0)):
            Sf = np.take(S, end if end == 0 else S.shape[a] - 1, axis=a)
            Xf = np.take(X, end if end == 0 else S.shape[a] - 1, axis=a)
            flux = sign * np.sum(Sf[..., a, :] * Xf, axis=-1)
            lhs += float(np.sum(face_w * flux))
            mass += float(np.sum(face_w * np.abs(flux)))
    actual = tuple((coords[a][i0], coords[a][i1]) for a, (i0, i1) in enumerate(idx))
    if mass == 0.0:
        return StokesResult(lhs, rhs, 0.0, actual)
    return StokesResult(lhs, rhs, abs(lhs - rhs) / mass, actual)


# -- growth classification ----------------------------------------------------------

DIVERGING = "DIVERGING"
CONVERGING = "CONVERGING"
BLOCK_RATIO = 0.5


@dataclass(frozen=True)
class GrowthVerdict:
    psi_divergence_test: str
    energy_over_psi_bounded: bool
    little_o_lambda: bool
    psi_block_ratio: float
    energy_block_ratio: float
    notes: tuple = field(default_factory=tuple)


def _blocks(rho_min: float, rho_max: float) -> tuple[float, float, float]:
    """Split [ln rho_min, ln rho_max] into two blocks of equal ratio in ln r."""
    l0, l2 = math.log(rho_min), math.log(rho_max)
    l1 = math.sqrt(l0 * l2)
    return math.exp(l0), math.exp(l1), math.exp(l2)


def psi_block_ratio(psi: Callable[[np.ndarray], np.ndarray], rho_min: float, rho_max: float) -> float:
    """Ratio of the two block increments of int dr / (r psi(r)).

    With s = ln r each block is int ds / psi(e^s).  For psi = (ln r)^q the
    ratio is k^(1-q) where k = sqrt(ln rho_max / ln rho_min): 1 for q = 1,
    below 1/2 for q = 2 once k >= 3.
    """
    a, b, c = _blocks(rho_min, rho_max)

    def g(s):
        return 1.0 / np.asarray(psi(np.exp(s)), dtype=float)

    first = simpson(g, math.log(a), math.log(b), rtol=1e-10)
    second = simpson(g, math.log(b), math.log(c), rtol=1e-10)
    return second / first if first > 0 else math.inf


def growth_classify(samples: Sequence[tuple[float, float]], psi: Callable, lam: float,
                    min_decades: float = 3.0, min_log_ratio: float = 9.0) -> GrowthVerdict:
    """Heuristic verdicts on slow divergence and o(rho^lambda) growth.

    Args:
        samples: (rho, E(rho)) pairs with increasing rho > 1.
        psi: positive weight function of r.
        lam: exponent for the little-o test.
        min_decades: required span of rho in decades.
        min_log_ratio: required ln(rho_max) / ln(rho_min); the block test
            separates q = 1 from q = 2 only when this is at least 9.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ConfigError("samples must be a list of (rho, E) pairs")
    rho, E = arr[:, 0], arr[:, 1]
    if np.any(np.diff(rho) <= 0):
        raise ConfigError("rho samples must increase")
    if rho[0] <= 1:
        raise SpanTooShort("rho samples must exceed 1 (psi is evaluated on ln r)")
    if math.log10(rho[-1] / rho[0]) < min_decades:
        raise SpanTooShort(f"samples span fewer than {min_decades:g} decades")
    if math.log(rho[-1]) / math.log(rho[0]) < min_log_ratio:
        raise SpanTooShort(f"ln(rho_max)/ln(rho_min) below {min_log_ratio:g}")

    ratio = psi_block_ratio(psi, rho[0], rho[-1])
    verdict = DIVERGING if ratio >= BLOCK_RATIO else CONVERGING

    # Stieltjes proxy for int_{B_rho} F / psi: sum of dE / psi at midpoints
    mid = np.sqrt(rho[1:] * rho[:-1])
    J = np.concatenate([[0.0], np.cumsum(np.diff(E) / np.asarray(psi(mid), dtype=float))])
    a, b, c = _blocks(rho[0], rho[-1])
    Ja, Jb, Jc = np.interp(np.log([a, b, c]), np.log(rho), J)
    first, second = Jb - Ja, Jc - Jb
    if second <= 1e-12 * max(abs(Jc), 1e-300):
        e_ratio = 0.0
    elif first <= 0:
        e_ratio = math.inf
    else:
        e_ratio = second / first
    bounded = bool(e_ratio < BLOCK_RATIO)

    last = rho >= rho[-1] / 10.0
    q = E[last] / rho[last] ** lam
    little_o = bool(q.size >= 2 and np.all(np.diff(q) <= 0))
    return GrowthVerdict(verdict, bounded, little_o, float(ratio), float(e_ratio))


def log_power_psi(q: float) -> Callable[[np.ndarray], np.ndarray]:
    """psi(r) = (ln r)^q."""
    return lambda r: np.log(np.asarray(r, dtype=float)) ** q
