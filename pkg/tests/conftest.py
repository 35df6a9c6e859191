"""Shared grid fixtures: the catenoid graph and compactly supported bumps."""

import numpy as np
import pytest

from fenergy.fields import GridField, GridSpec


def catenoid(spec: GridSpec, center=(0.0, 0.0), r_min: float = 0.0) -> GridField:
    """u = arccosh(|x - c|); nodes with |x - c| < r_min are masked with NaN."""
    x, y = spec.mesh()
    r = np.hypot(x - center[0], y - center[1])
    with np.errstate(invalid="ignore"):
        u = np.where(r >= max(r_min, 1.0), np.arccosh(np.maximum(r, 1.0)), np.nan)
    return GridField(spec, 0, u[..., None, None])


def bump(center, radius):
    """Smooth bump exp(-1/(1-q)) with q = |x-c|^2/radius^2, exactly zero outside."""
    def fn(*xs):
        q = sum((x - c) ** 2 for x, c in zip(xs, center)) / radius ** 2
        inside = q < 1
        out = np.zeros_like(q)
        out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
        return out
    return fn


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
