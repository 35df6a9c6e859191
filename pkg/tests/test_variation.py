import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bump
from fenergy.errors import ShapeMismatch, SupportViolation
from fenergy.fields import GridField, GridSpec, conservation_residual, conservation_tolerance, exterior_d
from fenergy.fprofile import bi_plus, identity, p_power
from fenergy.variation import (STEPS, bianchi_residual, first_variation_check, grid_energy,
                               ym_el_residual, ym_first_variation_check)

SPEC = GridSpec.square(2, -1.0, 1.0, 64)


def _eta(center=(0.13, -0.21), radius=0.55):
    return GridField.scalar(SPEC, bump(center, radius))


def test_critical_sigma_gives_zero_variation():
    sigma = GridField.scalar(SPEC, lambda x, y: x * x - y * y)
    rep = first_variation_check(sigma, _eta(), identity())
    assert abs(rep.rhs) <= 1e-10 and abs(rep.lhs) <= 1e-8


def test_cubic_identity_profile():
    sigma = GridField.scalar(SPEC, lambda x, y: x ** 3)
    rep = first_variation_check(sigma, _eta(), identity())
    assert rep.rel_err <= 1e-3
    assert abs(rep.rhs) > 1e-3          # the check is not vacuous
    assert rep.rel_err == pytest.approx(rep.abs_err / max(1.0, abs(rep.rhs)))
    assert rep.step_sizes == STEPS


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["identity", "p3", "bi-plus"]))
def test_random_pairs(seed, name):
    prof = {"identity": identity(), "p3": p_power(3.0), "bi-plus": bi_plus()}[name]
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, 4)
    c = rng.uniform(-0.3, 0.3, 2)
    sigma = GridField.scalar(SPEC, lambda x, y: a[0] * np.sin(2 * x + a[1]) + a[2] * x * y * y + a[3] * y)
    rep = first_variation_check(sigma, _eta(c, 0.5), prof)
    assert rep.rel_err <= 1e-3


def test_richardson_consistency():
    sigma = GridField.scalar(SPEC, lambda x, y: np.exp(x) * np.cos(y))
    eta = _eta()
    full = first_variation_check(sigma, eta, bi_plus())
    half = first_variation_check(sigma, eta, bi_plus(), steps=tuple(s / 2 for s in STEPS))
    assert abs(full.lhs - half.lhs) <= 4 * max(full.extrapolation_error, half.extrapolation_error)


def test_support_violation():
    sigma = GridField.scalar(SPEC, lambda x, y: x)
    with pytest.raises(SupportViolation):
        first_variation_check(sigma, GridField.scalar(SPEC, lambda x, y: 1 + 0 * x), identity())
    with pytest.raises(ShapeMismatch):
        first_variation_check(sigma, GridField.scalar(GridSpec.square(2, -1, 1, 32), lambda x, y: 0 * x),
                              identity())


def test_grid_energy_constant_gradient():
    sigma = GridField.scalar(SPEC, lambda x, y: x + y)         # |d sigma|^2 = 2
    assert grid_energy(exterior_d(sigma), identity()) == pytest.approx(4.0, rel=1e-12)
    assert grid_energy(exterior_d(sigma), bi_plus()) == pytest.approx(4 * (np.sqrt(3) - 1), rel=1e-12)


def _bump_B(c=(0.1, 0.05), r=0.6):
    b = bump(c, r)
    return GridField.one_form(SPEC, [b, lambda x, y: -0.5 * b(x, y)])


def test_ym_flat_connection_zero():
    A = exterior_d(GridField.scalar(SPEC, lambda x, y: np.sin(x * y)))
    rep = ym_first_variation_check(A, _bump_B(), identity())
    assert abs(rep.lhs) <= 1e-10 and abs(rep.rhs) <= 1e-10


@pytest.mark.parametrize("prof", [identity(), bi_plus()])
def test_ym_quadratic_potential(prof):
    A = GridField.one_form(SPEC, [lambda x, y: y * y, lambda x, y: 0 * x])
    rep = ym_first_variation_check(A, _bump_B(), prof)
    assert rep.rel_err <= 1e-3
    assert abs(rep.rhs) > 1e-4


def test_ym_critical_implies_conserved():
    # constant curvature dA = dx^dy is Yang-Mills critical for every profile
    A = GridField.one_form(SPEC, [lambda x, y: -0.5 * y, lambda x, y: 0.5 * x])
    for prof in (identity(), bi_plus()):
        assert ym_el_residual(A, prof) <= 1e-10
        dA = exterior_d(A)
        assert conservation_residual(dA, prof) <= conservation_tolerance(dA)


def test_bianchi():
    spec3 = GridSpec.square(3, -1.0, 1.0, 21)
    quad = GridField.one_form(spec3, [lambda x, y, z: x * y, lambda x, y, z: z * z,
                                      lambda x, y, z: x * x - y])
    assert bianchi_residual(quad) <= 1e-10
    smooth = GridField.one_form(spec3, [lambda x, y, z: np.sin(y * z), lambda x, y, z: np.exp(x) * z,
                                        lambda x, y, z: np.cos(x + y)])
    assert bianchi_residual(smooth) <= 1e-10
    assert bianchi_residual(GridField.one_form(SPEC, [lambda x, y: x, lambda x, y: y])) == 0.0


def test_bianchi_noisy_input_stays_closed(rng):
    # d d vanishes identically for the discrete operator, noise included
    spec3 = GridSpec.square(3, -1.0, 1.0, 17)
    noisy = GridField(spec3, 1, rng.standard_normal(spec3.shape + (3, 1)))
    assert bianchi_residual(noisy) <= 1e-9
