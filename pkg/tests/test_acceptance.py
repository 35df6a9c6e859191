"""Acceptance gate: each numbered criterion at its stated tolerance and time budget.

Every check prints one ``PASS`` or ``FAIL`` line.  Run with ``pytest -v`` or
directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import bump, catenoid  # noqa: E402

from fenergy.born_infeld import (MINUS, PLUS, dual_el_residual, dualize, duality_residuals,  # noqa: E402
                                 graph_energy_bound_check, pde_residual, solve_radial)
from fenergy.chern import cmc_flux, doubling_diagnostic  # noqa: E402
from fenergy.cli import PRESETS, main  # noqa: E402
from fenergy.energy import (CONVERGING, DIVERGING, equivariant_harmonic, growth_classify,  # noqa: E402
                            linear_coordinate, log_power_psi, monotonicity_experiment,
                            stokes_identity_check)
from fenergy.exterior import PointForm, double_contract  # noqa: E402
from fenergy.fields import (GridField, GridSpec, conservation_residual, conservation_tolerance,  # noqa: E402
                            div_stress, div_stress_direct, exterior_d, interior)
from fenergy.fprofile import (bi_minus, bi_plus, degree_ratio, f_degree, f_lower_degree,  # noqa: E402
                              identity, numeric_degree_bounds, p_power)
from fenergy.geometry import (CurvatureRegime, comparison_bounds, euclidean, hessian_factor,  # noqa: E402
                              hyperbolic)
from fenergy.variation import first_variation_check  # noqa: E402

SMOOTH_FIELDS = {
    "sin-exp": lambda x, y: np.sin(x) * np.exp(0.5 * y) + x * y * y,
    "sin-cos": lambda x, y: np.sin(2 * x) * np.cos(y) + 0.3 * x * y,
    "exp-product": lambda x, y: np.exp(0.5 * x * y),
    "poly": lambda x, y: x ** 3 * y - 0.5 * y ** 2 + x,
    "gauss": lambda x, y: np.exp(-(x * x + 2 * y * y)),
}


def _slope(hs, errs) -> float:
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


# -- criteria: each returns (ok, detail) ---------------------------------------------

def c01_degrees():
    plus, minus = bi_plus(), bi_minus()
    closed = (f_degree(plus), f_lower_degree(plus), f_degree(minus), f_lower_degree(minus))
    sup_p, inf_p = numeric_degree_bounds(plus, 1024)
    _, inf_m = numeric_degree_bounds(minus, 1024)
    ok = closed == (1.0, 0.5, math.inf, 1.0)
    ok &= abs(sup_p - 1.0) <= 1e-6 and abs(inf_p - 0.5) <= 1e-6 and abs(inf_m - 1.0) <= 1e-6
    return ok, f"closed={closed} numeric=({sup_p:.9f}, {inf_p:.9f}, {inf_m:.9f})"


def c02_ratios():
    t = np.geomspace(1e-8, 1e8, 1024)
    e1 = np.max(np.abs(degree_ratio(bi_plus(), t) - (0.5 + 0.5 / np.sqrt(1 + 2 * t))))
    tm = np.geomspace(1e-8, 0.5 * (1 - 1e-6), 1024)
    e2 = np.max(np.abs(degree_ratio(bi_minus(), tm) - (0.5 + 0.5 / np.sqrt(1 - 2 * tm))))
    return max(e1, e2) <= 1e-12, f"max errors plus={e1:.2e} minus={e2:.2e}"


def c03_hessian():
    r = np.geomspace(1e-3, 1e3, 1000)
    h1, h2 = comparison_bounds(CurvatureRegime.flat(), r)
    h = hessian_factor(euclidean(4), r)
    flat_err = max(np.max(np.abs(h1 - h)), np.max(np.abs(h2 - h)))
    ok = flat_err <= 1e-12
    for beta in (0.5, 1.0, 2.0):
        man = hyperbolic(3, beta)
        rh = np.geomspace(1e-3, 0.9 * man.r_max, 1000)
        hh = hessian_factor(man, rh)
        l1, l2 = comparison_bounds(CurvatureRegime.pinched_neg(beta, beta), rh)
        ok &= bool(np.all(l1 <= hh * (1 + 1e-12)) and np.all(hh <= l2 * (1 + 1e-12)))
    return ok, f"flat equality error {flat_err:.2e}; hyperbolic beta in (0.5, 1, 2) bracketed={ok}"


def c04_trace():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(500):
        m = int(rng.integers(1, 5))
        p = int(rng.integers(1, min(m, 3) + 1))
        k = int(rng.integers(1, 3))
        w = PointForm.random(m, p, k, rng)
        worst = max(worst, abs(double_contract(w).trace() - p * w.norm2()))
    return worst <= 1e-12, f"max |trace - p|w|^2| = {worst:.2e}"


def c05_divergence():
    hs = (1 / 32, 1 / 64, 1 / 128)
    ok, parts = True, []
    for name, fn in SMOOTH_FIELDS.items():
        for prof in (identity(), bi_plus()):
            errs = []
            for h in hs:
                spec = GridSpec.square(2, 0.0, 1.0, int(round(1 / h)) + 1)
                w = exterior_d(GridField.scalar(spec, fn))
                a, b = div_stress(w, prof).values, div_stress_direct(w, prof).values
                core = interior(spec)
                errs.append(float(np.max(np.abs(a - b)[core]) / np.max(np.abs(b)[core])))
            s = _slope(hs, errs)
            ok &= errs[1] <= 0.05 and s >= 1.0
            parts.append(f"{name}/{prof.name}: {errs[1]:.1e}, slope {s:.2f}")
    return ok, "; ".join(parts)


def c06_conservation():
    spec = GridSpec.square(2, -1.0, 1.0, 129)
    harm = exterior_d(GridField.scalar(spec, lambda x, y: x * x - y * y))
    r_h, t_h = conservation_residual(harm, identity()), conservation_tolerance(harm)
    cat = exterior_d(catenoid(GridSpec(((2.0, 4.0, 129), (-1.0, 1.0, 129)))))
    r_c, t_c = conservation_residual(cat, bi_plus()), conservation_tolerance(cat)
    cub = exterior_d(GridField.scalar(spec, lambda x, y: x ** 3))
    r_x, t_x = conservation_residual(cub, identity()), conservation_tolerance(cub)
    ok = r_h <= t_h and r_c <= t_c and r_x >= 10 * t_x
    return ok, (f"harmonic {r_h:.2e}/{t_h:.2e}, catenoid {r_c:.2e}/{t_c:.2e}, "
                f"cubic {r_x:.2e} vs 10x {10 * t_x:.2e}")


def c07_first_variation():
    spec = GridSpec.square(2, -1.0, 1.0, 64)
    rng = np.random.default_rng(7)
    worst = {}
    for prof in (identity(), p_power(3.0), bi_plus()):
        worst[prof.name] = 0.0
        for _ in range(10):
            a = rng.uniform(-1, 1, 4)
            c = rng.uniform(-0.3, 0.3, 2)
            sigma = GridField.scalar(
                spec, lambda x, y, a=a: a[0] * np.sin(2 * x + a[1]) + a[2] * x * y * y + a[3] * y)
            eta = GridField.scalar(spec, bump(c, 0.5))
            worst[prof.name] = max(worst[prof.name], first_variation_check(sigma, eta, prof).rel_err)
    return max(worst.values()) <= 1e-3, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def c08_stokes():
    ok, parts = True, []
    for name in ("sin-exp", "sin-cos", "exp-product"):
        for prof in (identity(), bi_plus()):
            errs = [stokes_identity_check(
                exterior_d(GridField.scalar(GridSpec.square(2, -1.0, 1.0, n), SMOOTH_FIELDS[name])),
                prof).rel_err for n in (65, 129, 257)]
            ok &= errs[1] <= 2e-2 and errs[0] > errs[1] > errs[2]
            parts.append(f"{name}/{prof.name}: " + " > ".join(f"{e:.1e}" for e in errs))
    return ok, "; ".join(parts)


def c09_monotonicity():
    radii = np.geomspace(0.1, 10.0, 50)
    flat = monotonicity_experiment(linear_coordinate(euclidean(4)), identity(),
                                   CurvatureRegime.flat(), radii)
    man = hyperbolic(5, 1.0)
    hyp = monotonicity_experiment(equivariant_harmonic(man, 12.0), identity(),
                                  CurvatureRegime.pinched_neg(1.0, 1.0), radii)
    ok = True
    for rep, lam in ((flat, 2.0), (hyp, 3.0)):
        ok &= rep.lam == lam and rep.monotone and rep.differential_ok and rep.worst_violation <= 1e-8
        ok &= bool(np.all(radii * rep.dE_drho >= rep.lam * rep.energies))
    return ok, (f"flat lam={flat.lam} worst={flat.worst_violation:.1e}; "
                f"hyperbolic lam={hyp.lam} worst={hyp.worst_violation:.1e}")


def c10_bi_solver():
    ok, parts = True, []
    for m, C in ((2, 1.0), (3, 1.0), (3, 0.5)):
        for sign in (PLUS, MINUS):
            sol = solve_radial(m, sign, C, (2.0, 3.0), 1024)
            fi, pde = float(np.max(sol.first_integral_residual())), pde_residual(sol)
            ok &= fi <= 1e-10 and pde <= 1e-6
            parts.append(f"({m},{C},{sign}) {fi:.1e}/{pde:.1e}")
    return ok, "; ".join(parts)


def c11_duality():
    spec = GridSpec(((2.0, 4.0, 257), (-1.0, 1.0, 257)))
    h = spec.spacing[0]
    pair = dualize(catenoid(spec))
    el = dual_el_residual(pair)
    res = duality_residuals(pair)
    tol = 5 * h * h
    ok = el <= 1e-4 and max(res.norm_relation, res.energy_relation, res.roundtrip) <= tol
    ok &= res.energy_inequality <= 0.0
    return ok, (f"h={h:.6f} el={el:.1e} norm={res.norm_relation:.1e} energy={res.energy_relation:.1e} "
                f"roundtrip={res.roundtrip:.1e} tol={tol:.1e}")


def c12_graph_bound():
    ok, parts = True, []
    for rho in (2.0, 4.0, 8.0):
        spec = GridSpec.square(2, -rho - 0.5, rho + 0.5, 257)
        res = graph_energy_bound_check(catenoid(spec, r_min=1.5), rho)
        ok &= res.ok and res.E <= 2 * math.pi * rho * rho
        parts.append(f"rho={rho:g}: E={res.E:.4g} <= {2 * math.pi * rho * rho:.4g}")
    return ok, "; ".join(parts)


def c13_chern_flux():
    spec = GridSpec(((2.0, 10.0, 1025), (-4.0, 4.0, 1025)))
    rep = cmc_flux(catenoid(spec), radii=np.linspace(0.5, 3.5, 7), center=(6.0, 0.0))
    ok = bool(np.all(np.abs(rep.c_est) * rep.radii <= 2.0)) and abs(rep.extrapolated_c) <= 1e-3
    worst_cap = 0.0
    for R in (1.0, 2.0):
        half = 0.7 * R
        cap = GridField.scalar(GridSpec.square(2, -half, half, int(round(2 * half * 128)) + 1),
                               lambda x, y: -np.sqrt(R * R - x * x - y * y))
        c = cmc_flux(cap, radii=np.linspace(0.1, 0.6, 6) * R).c_est
        worst_cap = max(worst_cap, float(np.max(np.abs(c / (-2.0 / R) - 1))))
    ok &= worst_cap <= 2e-2
    return ok, (f"max |c|r={np.max(np.abs(rep.c_est) * rep.radii):.1e} "
                f"c_inf={rep.extrapolated_c:.1e} cap rel err={worst_cap:.1e}")


def c14_growth():
    rho = np.geomspace(10.0, 1e10, 200)
    samples = list(zip(rho, np.log(rho)))
    v1 = growth_classify(samples, log_power_psi(1.0), 0.5)
    v2 = growth_classify(samples, log_power_psi(2.0), 0.5)
    ok = v1.psi_divergence_test == DIVERGING and v2.psi_divergence_test == CONVERGING
    ok &= v1.little_o_lambda
    return ok, f"q=1 {v1.psi_divergence_test}, q=2 {v2.psi_divergence_test}, o(rho^0.5)={v1.little_o_lambda}"


def c15_doubling():
    e = doubling_diagnostic(euclidean(3), np.geomspace(0.1, 100.0, 20))
    hy = doubling_diagnostic(hyperbolic(2, 1.0), np.geomspace(0.1, 20.0, 25))
    ok = abs(e.sup_ratio - 8.0) <= 1e-10 and not hy.bounded
    return ok, f"euclidean sup={e.sup_ratio!r}, hyperbolic bounded={hy.bounded}"


def c16_determinism():
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in PRESETS:
            a, b = Path(tmp, f"{name}-a.csv"), Path(tmp, f"{name}-b.csv")
            codes = [main(["preset", "run", name, "--seed", "11", "--out", str(p)]) for p in (a, b)]
            if codes != [0, 0] or a.read_bytes() != b.read_bytes():
                bad.append(name)
    return not bad, f"{len(PRESETS)} presets, mismatched: {bad or 'none'}"


# number, label, check, budget in seconds
CRITERIA = [
    (1, "degree closed forms", c01_degrees, 1),
    (2, "ratio identities", c02_ratios, 1),
    (3, "hessian comparison", c03_hessian, 1),
    (4, "trace identity", c04_trace, 5),
    (5, "divergence formula", c05_divergence, 60),
    (6, "conservation of critical points", c06_conservation, 30),
    (7, "first variation", c07_first_variation, 120),
    (8, "stokes identity", c08_stokes, 60),
    (9, "monotonicity", c09_monotonicity, 10),
    (10, "born-infeld solver", c10_bi_solver, 10),
    (11, "plane duality", c11_duality, 60),
    (12, "graph energy bound", c12_graph_bound, 10),
    (13, "flux constant", c13_chern_flux, 60),
    (14, "growth classifier", c14_growth, 1),
    (15, "doubling diagnostic", c15_doubling, 5),
    (16, "determinism", c16_determinism, 5),
]


def run_criterion(num, label, check, budget):
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    passed = bool(ok) and elapsed < budget
    line = f"{'PASS' if passed else 'FAIL'} criterion {num:2d} {label}: {detail} [{elapsed:.2f}s < {budget}s]"
    return passed, line


@pytest.mark.parametrize("num, label, check, budget", CRITERIA, ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, label, check, budget, capsys):
    passed, line = run_criterion(num, label, check, budget)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
