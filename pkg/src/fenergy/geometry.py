"""Model manifolds with a pole and Hessian comparison for the distance function.

A model manifold is the warped product g = dr^2 + f(r)^2 g_{S^{m-1}}.  Its
distance function from the pole has Hess(r) = (f'/f) [g - dr (x) dr] and
radial curvature K_r = -f''/f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, Inadmissible, OutOfRegimeRange, PoleViolation

PoleCheckRadius = 1e-6
PoleCheckTol = 1e-4


@dataclass(frozen=True)
class RadialManifold:
    m: int
    warp: Callable
    warp_d1: Callable
    warp_d2: Callable
    r_max: float = 1e6
    name: str = "custom"
    pole_ok: bool = field(init=False)

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError("dimension must be at least 2")
        r = PoleCheckRadius
        ok = (abs(float(self.warp(r)) / r - 1.0) <= PoleCheckTol
              and abs(float(self.warp_d1(r)) - 1.0) <= PoleCheckTol)
        object.__setattr__(self, "pole_ok", bool(ok))

    def volume_density(self, r):
        """f(r)^(m-1); multiply by |S^{m-1}| for the sphere area at radius r."""
        return np.asarray(self.warp(r), dtype=float) ** (self.m - 1)


def euclidean(m: int) -> RadialManifold:
    return RadialManifold(m, lambda r: np.asarray(r, dtype=float) * 1.0,
                          lambda r: np.ones_like(np.asarray(r, dtype=float)),
                          lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                          name="euclidean")


def hyperbolic(m: int, beta: float = 1.0) -> RadialManifold:
    """Constant curvature -beta^2; f = sinh(beta r)/beta.  r_max keeps sinh finite."""
    if beta <= 0:
        raise ConfigError("beta must be positive")
    b = float(beta)
    return RadialManifold(m, lambda r: np.sinh(b * np.asarray(r, dtype=float)) / b,
                          lambda r: np.cosh(b * np.asarray(r, dtype=float)),
                          lambda r: b * np.sinh(b * np.asarray(r, dtype=float)),
                          r_max=700.0 / b, name=f"hyperbolic({b:g})")


def from_curvature(m: int, curvature: Callable[[float], float], r_max: float,
                   name: str = "from-curvature") -> RadialManifold:
    """Integrate the Jacobi equation f'' = -K(r) f, f(0) = 0, f'(0) = 1."""
    sol = solve_ivp(lambda r, y: [y[1], -curvature(r) * y[0]], (0.0, r_max), [0.0, 1.0],
                    method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.success:
        raise ConfigError(f"Jacobi equation failed: {sol.message}")
    dense = sol.sol
    kvec = np.vectorize(curvature, otypes=[float])

    def f(r):
        return dense(np.asarray(r, dtype=float))[0]

    def d1(r):
        return dense(np.asarray(r, dtype=float))[1]

    def d2(r):
        r = np.asarray(r, dtype=float)
        return -kvec(r) * dense(r)[0]

    return RadialManifold(m, f, d1, d2, r_max=r_max, name=name)


def hessian_factor(man: RadialManifold, r):
    """h(r) with Hess(r) = h(r) [g - dr (x) dr]; equals f'(r)/f(r)."""
    if not man.pole_ok:
        raise PoleViolation(f"{man.name}: warp is not ~ r at the pole")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r >= man.r_max):
        raise ConfigError("hessian_factor needs 0 < r < r_max")
    return man.warp_d1(r) / man.warp(r)


def radial_curvature(man: RadialManifold, r):
    r = np.asarray(r, dtype=float)
    return -man.warp_d2(r) / man.warp(r)


# -- curvature regimes ---------------------------------------------------------

PINCHED_NEG = "pinched_neg"
FLAT = "flat"
EPS_DECAY = "eps_decay"
POLY_NEG = "poly_neg"
TAGS = (PINCHED_NEG, FLAT, EPS_DECAY, POLY_NEG)


@dataclass(frozen=True)
class CurvatureRegime:
    """One of the four radial-curvature hypotheses for the comparison lemma.

    pinched_neg: -alpha^2 <= K_r <= -beta^2
    flat:        K_r = 0
    eps_decay:   -A/(1+r^2)^(1+eps) <= K_r <= B/(1+r^2)^(1+eps)
    poly_neg:    -A r^(2q) <= K_r <= -B r^(2q), used for r >= 1
    """

    case_tag: str
    alpha: float = 0.0
    beta: float = 0.0
    A: float = 0.0
    B: float = 0.0
    eps: float = 0.0
    q: float = 0.0
    B0: float = field(init=False, default=0.0)

    def __post_init__(self):
        tag = self.case_tag
        if tag == PINCHED_NEG:
            if not (self.alpha > 0 and self.beta > 0):
                raise ConfigError("pinched_neg needs alpha > 0 and beta > 0")
            if self.alpha < self.beta:
                raise ConfigError("pinched_neg needs alpha >= beta (nonempty band)")
        elif tag == EPS_DECAY:
            if not (self.eps > 0 and self.A >= 0 and 0 <= self.B < 2 * self.eps):
                raise ConfigError("eps_decay needs eps > 0, A >= 0, 0 <= B < 2 eps")
        elif tag == POLY_NEG:
            if not (self.A >= self.B > 0 and self.q > 0):
                raise ConfigError("poly_neg needs A >= B > 0 and q > 0")
            half = (self.q + 1.0) / 2.0
            object.__setattr__(self, "B0", min(1.0, -half + math.sqrt(self.B + half * half)))
        elif tag != FLAT:
            raise ConfigError(f"unknown regime {tag!r}; choose from {TAGS}")

    @classmethod
    def pinched_neg(cls, alpha: float, beta: float) -> "CurvatureRegime":
        return cls(PINCHED_NEG, alpha=alpha, beta=beta)

    @classmethod
    def flat(cls) -> "CurvatureRegime":
        return cls(FLAT)

    @classmethod
    def eps_decay(cls, A: float, B: float, eps: float) -> "CurvatureRegime":
        return cls(EPS_DECAY, A=A, B=B, eps=eps)

    @classmethod
    def poly_neg(cls, A: float, B: float, q: float) -> "CurvatureRegime":
        return cls(POLY_NEG, A=A, B=B, q=q)

    def curvature_band(self, r):
        """(lower, upper) bounds on K_r at radius r."""
        r = np.asarray(r, dtype=float)
        if self.case_tag == PINCHED_NEG:
            return np.full_like(r, -self.alpha ** 2), np.full_like(r, -self.beta ** 2)
        if self.case_tag == FLAT:
            return np.zeros_like(r), np.zeros_like(r)
        if self.case_tag == EPS_DECAY:
            w = (1.0 + r * r) ** (1.0 + self.eps)
            return -self.A / w, self.B / w
        return -self.A * r ** (2 * self.q), -self.B * r ** (2 * self.q)


def comparison_bounds(regime: CurvatureRegime, r):
    """Lower and upper Hessian factors (h1, h2) for the regime at radius r."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ConfigError("comparison_bounds needs r > 0")
    tag = regime.case_tag
    if tag == PINCHED_NEG:
        a, b = regime.alpha, regime.beta
        return b / np.tanh(b * r), a / np.tanh(a * r)
    if tag == FLAT:
        return 1.0 / r, 1.0 / r
    if tag == EPS_DECAY:
        return ((1.0 - regime.B / (2 * regime.eps)) / r,
                math.exp(regime.A / (2 * regime.eps)) / r)
    if np.any(r < 1):
        raise OutOfRegimeRange("poly_neg bounds hold only for r >= 1")
    sa = math.sqrt(regime.A)
    rq = r ** regime.q
    return regime.B0 * rq, sa / math.tanh(sa) * rq


@dataclass(frozen=True)
class ExponentResult:
    case_tag: str
    kind: str           # "lambda" or "delta"
    value: float        # lambda, or delta for poly_neg
    exponent: float     # lambda, or 1 + delta for poly_neg
    admissible: bool


def vanishing_exponent(regime: CurvatureRegime, m: int, p: int, d_F: float,
                       strict: bool = True) -> ExponentResult:
    """Monotonicity exponent for a p-form with F-degree d_F under ``regime``.

    With ``strict`` (the default) an inadmissible case raises
    :class:`Inadmissible`; otherwise the result carries ``admissible=False``.
    """
    if m < 2 or p < 1:
        raise ConfigError("vanishing_exponent needs m >= 2 and p >= 1")
    if not math.isfinite(d_F):
        raise Inadmissible("d_F = +inf: the monotonicity exponent is undefined")
    tag = regime.case_tag
    if tag == PINCHED_NEG:
        a, b = regime.alpha, regime.beta
        value = m - 2 * p * (a / b) * d_F
        ok = (m - 1) * b - 2 * p * a * d_F >= 0
        kind, expo = "lambda", value
    elif tag == FLAT:
        value = m - 2 * p * d_F
        ok = value > 0
        kind, expo = "lambda", value
    elif tag == EPS_DECAY:
        value = (m - (m - 1) * regime.B / (2 * regime.eps)
                 - 2 * p * math.exp(regime.A / (2 * regime.eps)) * d_F)
        ok = value > 0
        kind, expo = "lambda", value
    else:
        sa = math.sqrt(regime.A)
        value = (m - 1) * regime.B0 - 2 * p * d_F * sa / math.tanh(sa)
        ok = value >= 0
        kind, expo = "delta", 1.0 + value
    result = ExponentResult(tag, kind, float(value), float(expo), bool(ok))
    if strict and not ok:
        raise Inadmissible(f"{tag}: side condition fails ({kind} = {value:.6g})")
    return result


def monotonicity_factor(regime: CurvatureRegime, r, m: int, p: int, d_F: float):
    """1 + (m-1) r h1(r) - 2 p d_F r h2(r), the pointwise factor of the pairing bound."""
    h1, h2 = comparison_bounds(regime, r)
    r = np.asarray(r, dtype=float)
    return 1.0 + (m - 1) * r * h1 - 2 * p * d_F * r * h2


def regime_from_params(tag: str, alpha: Optional[float] = None, beta: Optional[float] = None,
                       A: Optional[float] = None, B: Optional[float] = None,
                       eps: Optional[float] = None, q: Optional[float] = None) -> CurvatureRegime:
    """Build a regime from loosely specified parameters (command-line helper)."""
    tag = tag.replace("-", "_").lower()
    if tag == PINCHED_NEG:
        if alpha is None and beta is None:
            alpha = beta = 1.0
        alpha = beta if alpha is None else alpha
        beta = alpha if beta is None else beta
        return CurvatureRegime.pinched_neg(alpha, beta)
    if tag == FLAT:
        return CurvatureRegime.flat()
    if tag == EPS_DECAY:
        return CurvatureRegime.eps_decay(A or 0.0, B or 0.0, 1.0 if eps is None else eps)
    if tag == POLY_NEG:
        A = 1.0 if A is None else A
        return CurvatureRegime.poly_neg(A, A if B is None else B, 1.0 if q is None else q)
    raise ConfigError(f"unknown regime {tag!r}; choose from {TAGS}")
