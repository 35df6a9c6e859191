"""Energy-density profiles F and their degree invariants.

A profile is a strictly increasing C^2 function F with F(0) = 0, evaluated
at t = |omega|^2 / 2.  Its F-degree and F-lower degree are the sup and inf
of t F'(t) / F(t) over the admissible domain [0, cap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainExceeded

ArrayFn = Callable[[np.ndarray], np.ndarray]

# evaluation refuses t within this fraction of a finite cap
CAP_GUARD = 1e-9
# stand-in for the t -> 0+ limit of t F'(t) / F(t)
T_ZERO = 1e-8
# largest t probed on profiles with an infinite cap
T_INF = 1e14


@dataclass(frozen=True)
class FProfile:
    name: str
    F: ArrayFn
    dF: ArrayFn
    cap: float = math.inf
    closed_form_degrees: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not self.cap > 0:
            raise ConfigError(f"profile {self.name!r}: cap must be positive")
        f0 = float(self.F(np.asarray(0.0)))
        if abs(f0) > 1e-12:
            raise ConfigError(f"profile {self.name!r}: F(0) = {f0} != 0")
        t = sample_grid(self, 64)
        with np.errstate(over="ignore", invalid="ignore"):
            d = np.asarray(self.dF(t), dtype=float)
        finite = np.isfinite(d)
        if np.any(d[finite] <= 0):
            raise ConfigError(f"profile {self.name!r}: F' must be positive on [0, cap)")

    @property
    def t_limit(self) -> float:
        """Largest admissible argument (exclusive)."""
        if math.isinf(self.cap):
            return math.inf
        return self.cap * (1.0 - CAP_GUARD)

    def check(self, t) -> np.ndarray:
        """Return ``t`` as an array after enforcing 0 <= t < cap (NaN passes through)."""
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore"):
            if np.any(t < 0):
                raise DomainExceeded("profile argument must be nonnegative")
            if np.any(t >= self.t_limit):
                worst = float(np.nanmax(t))
                raise DomainExceeded(
                    f"profile {self.name!r}: t = {worst:.6g} reaches cap {self.cap:.6g}"
                )
        return t

    def second(self, t) -> np.ndarray:
        """F'' by central differencing F' in t (one-sided where the domain forces it)."""
        t = np.asarray(t, dtype=float)
        step = 1e-5 * np.maximum(np.abs(t), 1e-3)
        if not math.isinf(self.cap):
            step = np.minimum(step, 0.25 * (self.t_limit - t))
        lo = np.maximum(t - step, 0.0)
        hi = t + step
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.dF(hi) - self.dF(lo)) / (hi - lo)


def eval_profile(profile: FProfile, t: float) -> tuple[float, float]:
    """Return ``(F(t), F'(t))``, raising :class:`DomainExceeded` at or past the cap."""
    t = profile.check(t)
    return float(profile.F(t)), float(profile.dF(t))


# -- built-ins ---------------------------------------------------------------

def identity() -> FProfile:
    return FProfile("identity", lambda t: np.asarray(t, dtype=float) * 1.0,
                    lambda t: np.ones_like(np.asarray(t, dtype=float)),
                    closed_form_degrees=(1.0, 1.0))


def p_power(p: float) -> FProfile:
    """F(t) = (2t)^(p/2) / p, the p-energy density."""
    if p < 1:
        raise ConfigError("p-power profile needs p >= 1")
    p = float(p)

    def F(t):
        return np.power(2.0 * np.asarray(t, dtype=float), p / 2.0) / p

    def dF(t):
        with np.errstate(divide="ignore"):
            return np.power(2.0 * np.asarray(t, dtype=float), p / 2.0 - 1.0)

    return FProfile(f"p-power({p:g})", F, dF, closed_form_degrees=(p / 2.0, p / 2.0))


def bi_plus() -> FProfile:
    """F(t) = sqrt(1 + 2t) - 1, written without cancellation near t = 0."""

    def F(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * t / (np.sqrt(1.0 + 2.0 * t) + 1.0)

    def dF(t):
        return 1.0 / np.sqrt(1.0 + 2.0 * np.asarray(t, dtype=float))

    return FProfile("bi-plus", F, dF, closed_form_degrees=(1.0, 0.5))


def bi_minus() -> FProfile:
    """F(t) = 1 - sqrt(1 - 2t) on [0, 1/2)."""

    def F(t):
        t = np.asarray(t, dtype=float)
        return 2.0 * t / (1.0 + np.sqrt(1.0 - 2.0 * t))

    def dF(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / np.sqrt(1.0 - 2.0 * np.asarray(t, dtype=float))

    return FProfile("bi-minus", F, dF, cap=0.5, closed_form_degrees=(math.inf, 1.0))


def exp_minus_one() -> FProfile:
    """F(t) = e^t - 1; the shift keeps F(0) = 0."""

    def F(t):
        with np.errstate(over="ignore"):
            return np.expm1(np.asarray(t, dtype=float))

    def dF(t):
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(t, dtype=float))

    return FProfile("exp-minus-one", F, dF, closed_form_degrees=(math.inf, 1.0))


BUILTINS = {
    "identity": identity,
    "p-power": p_power,
    "bi-plus": bi_plus,
    "bi-minus": bi_minus,
    "exp-minus-one": exp_minus_one,
}


def get_profile(name: str, p: Optional[float] = None) -> FProfile:
    """Look up a built-in by name; ``p-power`` needs ``p``."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown profile {name!r}; choose from {sorted(BUILTINS)}") from None
    if name == "p-power":
        if p is None:
            raise ConfigError("p-power profile needs --p")
        return factory(p)
    return factory()


# -- degrees -----------------------------------------------------------------

def sample_grid(profile: FProfile, samples: int, t_max: Optional[float] = None) -> np.ndarray:
    """Log-spaced sample points from T_ZERO up to the capped domain end."""
    if t_max is None:
        if math.isinf(profile.cap):
            t_max = T_INF
        else:
            t_max = profile.cap * (1.0 - 1e-6)
    return np.geomspace(T_ZERO, t_max, samples)


def degree_ratio(profile: FProfile, t) -> np.ndarray:
    """t F'(t) / F(t), NaN where the profile overflows."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        r = t * profile.dF(t) / profile.F(t)
    return np.where(np.isfinite(r), r, np.nan)


def numeric_degree_bounds(profile: FProfile, samples: int = 1024,
                          t_max: Optional[float] = None) -> tuple[float, float]:
    """Sup and inf of t F'/F over a log-spaced grid (the grid starts at the t -> 0 proxy)."""
    if samples < 16:
        raise ConfigError("numeric_degree_bounds needs at least 16 samples")
    r = degree_ratio(profile, sample_grid(profile, samples, t_max))
    return float(np.nanmax(r)), float(np.nanmin(r))


def f_degree(profile: FProfile, samples: int = 1024) -> float:
    """d_F = sup t F'/F.  Closed form when the profile carries one, else a grid estimate."""
    if profile.closed_form_degrees is not None:
        return profile.closed_form_degrees[0]
    return numeric_degree_bounds(profile, samples)[0]


def f_lower_degree(profile: FProfile, samples: int = 1024) -> float:
    """l_F = inf t F'/F, same conventions as :func:`f_degree`."""
    if profile.closed_form_degrees is not None:
        return profile.closed_form_degrees[1]
    return numeric_degree_bounds(profile, samples)[1]
