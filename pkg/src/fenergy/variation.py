"""First-variation checks for F-energies of d(sigma) and abelian curvatures dA.

The left side is a Richardson-extrapolated central difference of the grid
energy along sigma + t eta.  The right side is the quadrature of the
tension against eta.  Both use the same trapezoid weights, so with eta
vanishing near the boundary the two agree up to the difference error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatch, SupportViolation
from .fields import (GridField, exterior_d, interior_max, norm2, tension)
from .fprofile import FProfile
from .quadrature import tensor_weights

STEPS = (1e-3, 5e-4, 2.5e-4)
SUPPORT_MARGIN = 3


@dataclass(frozen=True)
class VariationReport:
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    step_sizes: tuple
    extrapolation_error: float
    half_step_lhs: float


def grid_energy(omega: GridField, profile: FProfile) -> float:
    """Trapezoid quadrature of F(|w|^2/2); numpy's pairwise sum keeps it order-stable."""
    t = profile.check(0.5 * norm2(omega))
    w = tensor_weights(omega.spec.shape, omega.spec.spacing)
    return float(np.sum(w * np.asarray(profile.F(t), dtype=float)))


def _check_support(eta: GridField, margin: int) -> None:
    v = eta.values
    for ax in range(eta.m):
        n = v.shape[ax]
        edge = np.concatenate([np.take(v, range(margin), axis=ax),
                               np.take(v, range(n - margin, n), axis=ax)], axis=ax)
        if np.any(edge != 0.0):
            raise SupportViolation(f"variation is nonzero within {margin} nodes of the boundary")


def _richardson(values: list[float], steps) -> tuple[float, float]:
    """Eliminate the h^2 and h^4 terms of central differences at halving steps."""
    if len(values) != 3 or not np.allclose(np.diff(np.log(steps)), np.log(0.5)):
        raise ConfigError("Richardson extrapolation expects three halving steps")
    d0, d1, d2 = values
    r01 = (4 * d1 - d0) / 3
    r12 = (4 * d2 - d1) / 3
    best = (16 * r12 - r01) / 15
    return best, abs(best - r12)


def _variation(base: GridField, direction: GridField, profile: FProfile,
               steps) -> tuple[list[float], float]:
    E0 = grid_energy(base, profile)
    diffs = []
    for s in steps:
        plus = base + direction * s
        minus = base - direction * s
        diffs.append((grid_energy(plus, profile) - grid_energy(minus, profile)) / (2 * s))
    return diffs, E0


def _report(diffs, steps, E0, rhs) -> VariationReport:
    lhs, est = _richardson(diffs, steps)
    # central differences lose about eps |E| / s to cancellation
    est = max(est, 1e-15 * abs(E0) / min(steps))
    abs_err = abs(lhs - rhs)
    return VariationReport(lhs, rhs, abs_err, abs_err / max(1.0, abs(rhs)), tuple(steps),
                           est, diffs[1])


def first_variation_check(sigma: GridField, eta: GridField, profile: FProfile,
                          steps=STEPS, margin: int = SUPPORT_MARGIN) -> VariationReport:
    """Compare dE(sigma + t eta)/dt at 0 with -int <tau_F(sigma), eta>."""
    if sigma.spec != eta.spec or sigma.p != eta.p or sigma.k != eta.k:
        raise ShapeMismatch("sigma and eta must share grid, degree and fiber")
    _check_support(eta, margin)
    ds, de = exterior_d(sigma), exterior_d(eta)
    diffs, E0 = _variation(ds, de, profile, steps)
    tau = tension(sigma, profile).values
    w = tensor_weights(sigma.spec.shape, sigma.spec.spacing)
    rhs = -float(np.sum(w * np.sum(tau * eta.values, axis=(-2, -1))))
    return _report(diffs, steps, E0, rhs)


def ym_first_variation_check(A: GridField, B: GridField, profile: FProfile,
                             steps=STEPS, margin: int = SUPPORT_MARGIN) -> VariationReport:
    """Abelian gauge version: curvature dA, variation B, right side int <delta(F' dA), B>."""
    if A.p != 1 or B.p != 1:
        raise ShapeMismatch("connection forms must have degree 1")
    return first_variation_check(A, B, profile, steps, margin)


def ym_el_residual(A: GridField, profile: FProfile) -> float:
    """Max interior norm of delta(F'(|dA|^2/2) dA)."""
    return interior_max(np.sqrt(norm2(tension(A, profile))), A.spec)


def bianchi_residual(A: GridField) -> float:
    """Max interior |d(dA)|; identically 0 in two dimensions."""
    if A.p != 1:
        raise ShapeMismatch("connection forms must have degree 1")
    if A.m < 3:
        return 0.0
    return interior_max(np.sqrt(norm2(exterior_d(exterior_d(A)))), A.spec)
