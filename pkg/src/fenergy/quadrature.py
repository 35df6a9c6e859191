"""One-dimensional quadrature and grid weights."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


def simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
            rtol: float = 1e-8, atol: float = 0.0, min_panels: int = 16,
            max_panels: int = 1 << 20) -> float:
    """Composite Simpson with panel doubling until two levels agree.

    ``f`` must accept an array of abscissae.  Stops when successive estimates
    differ by less than ``max(atol, rtol * |I|)``.
    """
    if a == b:
        return 0.0
    if b < a:
        return -simpson(f, b, a, rtol, atol, min_panels, max_panels)
    n = min_panels if min_panels % 2 == 0 else min_panels + 1
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), dtype=float)
    prev = _simpson_sum(y, (b - a) / n)
    while True:
        n *= 2
        mid = a + (b - a) * (np.arange(1, n, 2) / n)
        ym = np.asarray(f(mid), dtype=float)
        full = np.empty(n + 1)
        full[0::2] = y
        full[1::2] = ym
        y = full
        cur = _simpson_sum(y, (b - a) / n)
        if abs(cur - prev) <= max(atol, rtol * abs(cur)) or n >= max_panels:
            return float(cur)
        prev = cur


def _simpson_sum(y: np.ndarray, h: float) -> float:
    return h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def tensor_weights(shape, spacing) -> np.ndarray:
    """Product trapezoid weights on a rectangular grid."""
    w = np.ones(())
    for n, h in zip(shape, spacing):
        w = np.multiply.outer(w, trapezoid_weights(n, h))
    return w


def sphere_area(m: int) -> float:
    """Volume of the unit sphere S^(m-1) in R^m."""
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
