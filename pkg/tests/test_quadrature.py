import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fenergy.parallel import pmap, thread_count
from fenergy.quadrature import ball_volume, simpson, sphere_area, tensor_weights


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(0.5, 5))
def test_simpson_against_scipy(a, width, k):
    b = a + width
    f = lambda x: np.sin(k * x) * np.exp(-0.3 * x * x)
    ref = quad(f, a, b, epsabs=1e-12, epsrel=1e-11)[0]
    assert simpson(f, a, b, rtol=1e-12, atol=1e-14) == pytest.approx(ref, abs=1e-10)


def test_simpson_orientation_and_empty():
    f = lambda x: x ** 2
    assert simpson(f, 0, 0) == 0.0
    assert simpson(f, 1, 0) == pytest.approx(-1 / 3, rel=1e-12)


def test_unit_volumes():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2)
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
    for n in range(1, 8):
        assert sphere_area(n) == pytest.approx(n * ball_volume(n), rel=1e-14)


def test_tensor_weights_integrate_bilinear():
    w = tensor_weights((11, 21), (0.1, 0.05))
    x, y = np.meshgrid(np.linspace(0, 1, 11), np.linspace(0, 1, 21), indexing="ij")
    assert np.sum(w) == pytest.approx(1.0, rel=1e-14)
    assert np.sum(w * x * y) == pytest.approx(0.25, rel=1e-14)


def test_pmap_preserves_order(monkeypatch):
    monkeypatch.setenv("FENERGY_THREADS", "3")
    assert thread_count() == 3
    assert pmap(lambda v: v * v, range(20)) == [v * v for v in range(20)]
    monkeypatch.setenv("FENERGY_THREADS", "junk")
    assert thread_count() >= 1
    monkeypatch.setenv("FENERGY_THREADS", "0")
    assert thread_count() == 1
