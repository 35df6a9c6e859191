import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fenergy.errors import ConfigError, DomainExceeded
from fenergy.fprofile import (BUILTINS, T_INF, bi_minus, bi_plus, degree_ratio, eval_profile,
                              exp_minus_one, f_degree, f_lower_degree, get_profile, identity,
                              numeric_degree_bounds, p_power, sample_grid)


@pytest.mark.parametrize("prof, t, expected", [
    (identity(), 2.0, (2.0, 1.0)),
    (bi_plus(), 4.0, (2.0, 1.0 / 3.0)),
    (bi_minus(), 0.18, (0.2, 1.25)),
])
def test_eval_profile_values(prof, t, expected):
    F, dF = eval_profile(prof, t)
    assert F == pytest.approx(expected[0], abs=1e-14)
    assert dF == pytest.approx(expected[1], abs=1e-14)


def test_bi_minus_rejects_cap():
    with pytest.raises(DomainExceeded):
        eval_profile(bi_minus(), 0.5)
    with pytest.raises(DomainExceeded):
        eval_profile(bi_minus(), 0.5 * (1 - 1e-11))


def test_negative_t_rejected():
    with pytest.raises(DomainExceeded):
        eval_profile(identity(), -1.0)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_zero_at_origin_and_increasing(name):
    prof = get_profile(name, 3.0 if name == "p-power" else None)
    assert abs(float(prof.F(0.0))) <= 1e-12
    t = sample_grid(prof, 256, t_max=min(prof.cap * 0.99, 50.0))
    assert np.all(prof.dF(t) > 0)


@pytest.mark.parametrize("prof, d, l", [
    (bi_plus(), 1.0, 0.5),
    (bi_minus(), math.inf, 1.0),
    (identity(), 1.0, 1.0),
    (p_power(3.0), 1.5, 1.5),
])
def test_closed_form_degrees(prof, d, l):
    assert f_degree(prof) == d
    assert f_lower_degree(prof) == l


def test_numeric_bounds_bi_plus():
    sup_est, inf_est = numeric_degree_bounds(bi_plus(), 1024)
    assert 1 - 1e-6 <= sup_est <= 1.0
    assert 0.5 <= inf_est <= 0.5 + 1e-6


def test_numeric_bounds_identity():
    assert numeric_degree_bounds(identity(), 64) == pytest.approx((1.0, 1.0), abs=1e-12)


def test_exp_profile_degree_unbounded():
    sup_est, _ = numeric_degree_bounds(exp_minus_one(), 1024)
    assert sup_est > 10


def test_exp_profile_small_t_accuracy():
    # expm1 keeps F accurate where e^t - 1 would cancel
    assert float(exp_minus_one().F(1e-12)) == pytest.approx(1e-12, rel=1e-10)


def test_numeric_bounds_need_samples():
    with pytest.raises(ConfigError):
        numeric_degree_bounds(identity(), 8)


def test_bi_minus_sup_grows_with_grid_extent():
    prof = bi_minus()
    sups = [numeric_degree_bounds(prof, 1024, t_max=0.5 * (1 - eps))[0]
            for eps in (1e-2, 1e-4, 1e-6)]
    assert sups[0] < sups[1] < sups[2]


def test_ratio_identities_on_grid():
    t = np.geomspace(1e-8, 1e8, 1024)
    assert np.max(np.abs(degree_ratio(bi_plus(), t) - (0.5 + 0.5 / np.sqrt(1 + 2 * t)))) <= 1e-12
    tm = np.geomspace(1e-8, 0.5 * (1 - 1e-6), 1024)
    assert np.max(np.abs(degree_ratio(bi_minus(), tm) - (0.5 + 0.5 / np.sqrt(1 - 2 * tm)))) <= 1e-12


def test_unknown_profile_and_missing_p():
    with pytest.raises(ConfigError):
        get_profile("nope")
    with pytest.raises(ConfigError):
        get_profile("p-power")


def test_infinite_cap_grid_end():
    assert sample_grid(bi_plus(), 16)[-1] == pytest.approx(T_INF)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1.0, max_value=8.0))
def test_p_power_degrees_are_half_p(p):
    prof = p_power(p)
    sup_est, inf_est = numeric_degree_bounds(prof, 128)
    assert sup_est == pytest.approx(p / 2, rel=1e-9)
    assert inf_est == pytest.approx(p / 2, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["identity", "bi-plus", "bi-minus", "exp-minus-one"]))
def test_lower_degree_below_degree(name):
    prof = get_profile(name)
    assert f_lower_degree(prof) <= f_degree(prof)
    sup_est, inf_est = numeric_degree_bounds(prof, 256)
    assert inf_est <= sup_est
