"""Command-line entry point: one subcommand per experiment, CSV on stdout or --out.

Every CSV starts with a comment line carrying the package version, the seed
and the resolved parameters, followed by the header row.  Parameters may
come from a ``key=value`` file given with --config; flags override it.

Exit status: 0 on success, 1 when a check ran and failed, 2 on bad
configuration, 3 on numerical-domain errors.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .born_infeld import (bi_energy, dual_el_residual, dualize, duality_residuals,
                          graph_energy_bound_check, pde_residual, solve_radial)
from .chern import FLUX_COLUMNS, cmc_flux, doubling_diagnostic, punctured_flux, spacelike_flux
from .energy import (REPORT_COLUMNS, equivariant_harmonic, growth_classify,
                     grid_monotonicity_experiment, linear_coordinate, log_power_psi,
                     monotonicity_experiment, constant_form, stokes_identity_check, zero_form)
from .errors import CheckFailed, ConfigError, FEnergyError
from .fields import GridField, GridSpec, format_float, read_field_csv, write_field_csv
from .fprofile import f_degree, f_lower_degree, get_profile, numeric_degree_bounds
from .geometry import euclidean, hyperbolic, regime_from_params, vanishing_exponent
from .variation import first_variation_check, ym_first_variation_check


# -- output helpers ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def _comment(args: argparse.Namespace) -> str:
    skip = {"func", "config", "out", "command", "seed"}
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip and v is not None)
    params = " ".join(f"{k}={v}" for k, v in items)
    return f"fenergy {__version__} seed={args.seed} {params}".rstrip()


class Output:
    """Collects CSV text for one run and writes it once."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.buf = io.StringIO()
        self.buf.write(f"# {_comment(args)}\n")

    def table(self, header: Sequence[str], rows) -> None:
        self.buf.write(",".join(header) + "\n")
        for row in rows:
            self.buf.write(",".join(_fmt(v) for v in row) + "\n")

    def flush(self) -> None:
        text = self.buf.getvalue()
        if self.args.out:
            with open(self.args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


# -- parsing helpers ---------------------------------------------------------------

def _range(text: str, count: bool = False):
    parts = text.split(":")
    try:
        vals = [float(x) for x in parts]
    except ValueError:
        raise ConfigError(f"bad range {text!r}") from None
    if count:
        if len(vals) != 3 or vals[2] < 1 or vals[2] != int(vals[2]):
            raise ConfigError(f"expected lo:hi:count, got {text!r}")
        return np.linspace(vals[0], vals[1], int(vals[2]))
    if len(vals) != 2:
        raise ConfigError(f"expected lo:hi, got {text!r}")
    return tuple(vals)


def _point(text: Optional[str], m: int):
    if text is None:
        return None
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"bad point {text!r}") from None
    if len(vals) != m:
        raise ConfigError(f"point needs {m} coordinates")
    return vals


def _need(args, *names) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError("missing required parameter(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _load_field(path: str) -> GridField:
    if not os.path.isfile(path):
        raise ConfigError(f"no such file: {path}")
    return read_field_csv(path)


def _profile(args) -> object:
    return get_profile(args.profile, getattr(args, "profile_p", None))


# -- grid presets (shared by stokes-check and monotone) -------------------------------

GRID_PRESETS: dict[str, Callable] = {
    "harmonic-quadratic": lambda x, y, *z: x * x - y * y,
    "cubic": lambda x, y, *z: x ** 3,
    "trig": lambda x, y, *z: np.sin(x) * np.cos(2 * y),
    "exp-product": lambda x, y, *z: np.exp(0.5 * x * y),
    "linear": lambda x, y, *z: x,
}


def _grid_field(name: str, n: int, m: int = 2, half: float = 1.0) -> GridField:
    """du for a named scalar preset, or a CSV form field via csv:PATH."""
    if name.startswith("csv:"):
        return _load_field(name[4:])
    if name not in GRID_PRESETS:
        raise ConfigError(f"unknown field {name!r}; choose from {sorted(GRID_PRESETS)} or csv:PATH")
    from .fields import exterior_d
    spec = GridSpec.square(m, -half, half, n)
    return exterior_d(GridField.scalar(spec, GRID_PRESETS[name]))


# -- subcommands --------------------------------------------------------------------

def cmd_profile(args, out: Output) -> int:
    _need(args, "name")
    prof = get_profile(args.name, args.p)
    sup_est, inf_est = numeric_degree_bounds(prof, args.samples)
    out.table(("name", "d_F", "l_F", "sup_est", "inf_est"),
              [(prof.name, f_degree(prof), f_lower_degree(prof), sup_est, inf_est)])
    return 0


def _regime(args, tag: str):
    return regime_from_params(tag, alpha=args.alpha, beta=args.beta, A=args.A, B=args.B,
                              eps=args.eps, q=args.q)


def cmd_exponents(args, out: Output) -> int:
    _need(args, "case", "m", "p", "dF")
    res = vanishing_exponent(_regime(args, args.case), args.m, args.p, args.dF, strict=False)
    out.table(("case", "kind", "value", "exponent", "admissible"),
              [(res.case_tag, res.kind, res.value, res.exponent, res.admissible)])
    return 0


def cmd_monotone(args, out: Output) -> int:
    _need(args, "regime", "m", "p", "profile", "field")
    prof = _profile(args)
    regime = _regime(args, args.regime)
    radii = np.geomspace(args.rho_min, args.rho_max, args.n)
    if args.field.startswith("csv:"):
        fld = _load_field(args.field[4:])
        rep = grid_monotonicity_experiment(fld, prof, regime, radii, _point(args.center, fld.m))
    else:
        if args.manifold == "euclidean":
            man = euclidean(args.m)
        elif args.manifold == "hyperbolic":
            man = hyperbolic(args.m, args.curvature_beta)
        else:
            raise ConfigError("manifold must be euclidean or hyperbolic")
        presets = {
            "linear-coordinate": lambda: linear_coordinate(man),
            "equivariant-harmonic": lambda: equivariant_harmonic(man, 1.2 * args.rho_max),
            "zero": lambda: zero_form(man, args.p),
            "const-dr": lambda: constant_form(man),
        }
        if args.field not in presets:
            raise ConfigError(f"unknown field {args.field!r}; choose from {sorted(presets)} or csv:PATH")
        rep = monotonicity_experiment(presets[args.field](), prof, regime, radii, args.p)
    out.table(REPORT_COLUMNS, rep.rows())
    return 0 if rep.monotone and rep.differential_ok else 1


def cmd_stokes(args, out: Output) -> int:
    _need(args, "profile", "field")
    prof = _profile(args)
    fld = _grid_field(args.field, args.grid)
    box = None
    if args.box is not None:
        lo, hi = _range(args.box)
        box = tuple((lo, hi) for _ in range(fld.m))
    res = stokes_identity_check(fld, prof, box)
    out.table(("lhs", "rhs", "rel_err"), [(res.lhs, res.rhs, res.rel_err)])
    return 0 if res.rel_err <= args.tol else 1


def _bump(center, radius):
    def fn(*xs):
        q = sum((x - c) ** 2 for x, c in zip(xs, center)) / radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(q < 1, np.exp(-1.0 / (1.0 - np.minimum(q, 1 - 1e-300))), 0.0)
    return fn


def cmd_varcheck(args, out: Output) -> int:
    _need(args, "which", "profile")
    prof = _profile(args)
    n = args.grid
    half = 0.5 * (n - 1) * args.h
    spec = GridSpec.square(2, -half, half, n)
    rng = np.random.default_rng(args.seed)
    a = rng.uniform(-0.4, 0.4, size=6)
    c = rng.uniform(-0.25, 0.25, size=2) * half
    bump = _bump(c, 0.5 * half)
    if args.which == "efg":
        sigma = GridField.scalar(spec, lambda x, y: a[0] * x ** 3 + a[1] * np.sin(x + a[2] * y)
                                 + a[3] * x * y / half)
        eta = GridField.scalar(spec, bump)
        rep = first_variation_check(sigma, eta, prof)
    elif args.which == "ym":
        A = GridField.one_form(spec, [lambda x, y: a[0] * y * y + a[1] * np.sin(y),
                                      lambda x, y: a[2] * x * y + a[3] * np.cos(x)])
        B = GridField.one_form(spec, [bump, lambda x, y: a[4] * bump(x, y)])
        rep = ym_first_variation_check(A, B, prof)
    else:
        raise ConfigError("--which must be efg or ym")
    out.table(("lhs", "rhs", "abs_err", "rel_err"), [(rep.lhs, rep.rhs, rep.abs_err, rep.rel_err)])
    return 0 if rep.rel_err <= args.tol else 1


def cmd_bi(args, out: Output) -> int:
    if args.action == "solve":
        _need(args, "sign", "m", "C", "r")
        sol = solve_radial(args.m, args.sign, args.C, _range(args.r), args.n)
        res = sol.first_integral_residual()
        out.table(("r", "slope", "u", "first_integral_residual"),
                  zip(sol.r_grid, sol.slope, sol.u, res))
        if args.pde_check:
            sys.stderr.write(f"pde_residual={pde_residual(sol):.6e}\n")
        return 0
    if args.action == "dualize":
        _need(args, "input")
        omega = _load_field(args.input)
        pair = dualize(omega, 1 if args.sign in (None, "plus") else -1)
        r = duality_residuals(pair)
        if args.sigma_out:
            with open(args.sigma_out, "w", newline="") as fh:
                write_field_csv(pair.sigma, fh, _comment(args))
        out.table(("closedness", "dual_el_residual", "norm_relation", "energy_inequality",
                   "energy_relation", "roundtrip"),
                  [(pair.closedness, dual_el_residual(pair), r.norm_relation, r.energy_inequality,
                    r.energy_relation, r.roundtrip)])
        return 0
    if args.action == "bound":
        _need(args, "input", "rho")
        omega = _load_field(args.input)
        res = graph_energy_bound_check(omega, args.rho, _point(args.center, omega.m))
        out.table(("rho", "E", "bound", "ok"), [(args.rho, res.E, res.bound, res.ok)])
        return 0 if res.ok else 1
    if args.action == "energy":
        _need(args, "input")
        omega = _load_field(args.input)
        out.table(("sign", "energy"), [(args.sign or "plus", bi_energy(omega, args.sign or "plus"))])
        return 0
    raise ConfigError("bi needs one of solve, dualize, bound, energy")


def cmd_chern(args, out: Output) -> int:
    if args.action == "doubling":
        _need(args, "radii")
        man = euclidean(args.m) if args.manifold == "euclidean" else hyperbolic(args.m, args.curvature_beta)
        res = doubling_diagnostic(man, _range(args.radii, count=True))
        radii = _range(args.radii, count=True)
        out.table(("r", "ratio", "sup_ratio", "bounded"),
                  [(r, q, res.sup_ratio, res.bounded) for r, q in zip(radii, res.ratios)])
        return 0
    _need(args, "input", "radii")
    fld = _load_field(args.input)
    radii = _range(args.radii, count=True)
    plane = None if args.plane is None else tuple(int(i) for i in args.plane.split(","))
    center = _point(args.center, fld.m)
    if args.action == "flux":
        rep = cmc_flux(fld, plane, radii, center)
    elif args.action == "punctured":
        _need(args, "r0")
        rep = punctured_flux(fld, plane, args.r0, radii, center, args.C1)
    elif args.action == "spacelike":
        rep = spacelike_flux(fld, plane, radii, center)
    else:
        raise ConfigError("chern needs one of flux, punctured, spacelike, doubling")
    out.table(FLUX_COLUMNS, rep.rows())
    return 0 if bool(np.all(rep.satisfied)) else 1


def cmd_growth(args, out: Output) -> int:
    _need(args, "lam")
    psi = log_power_psi(args.q)
    rho = np.geomspace(args.rho_min, args.rho_max, args.n)
    energies = {"log": np.log(rho), "sqrt": np.sqrt(rho), "linear": rho,
                "loglog": np.log(np.log(rho))}
    if args.energy not in energies:
        raise ConfigError(f"unknown energy {args.energy!r}; choose from {sorted(energies)}")
    v = growth_classify(list(zip(rho, energies[args.energy])), psi, args.lam)
    out.table(("psi_divergence_test", "energy_over_psi_bounded", "little_o_lambda",
               "psi_block_ratio", "energy_block_ratio"),
              [(v.psi_divergence_test, v.energy_over_psi_bounded, v.little_o_lambda,
                v.psi_block_ratio, v.energy_block_ratio)])
    return 0


# Command lines reproducing the command-line side of each acceptance check.
PRESETS: dict[str, list[str]] = {
    "degrees-bi-plus": ["profile", "--name", "bi-plus"],
    "degrees-bi-minus": ["profile", "--name", "bi-minus"],
    "exponent-flat": ["exponents", "--case", "flat", "--m", "4", "--p", "1", "--dF", "1"],
    "exponent-pinched": ["exponents", "--case", "pinched_neg", "--alpha", "1", "--beta", "1",
                         "--m", "5", "--p", "1", "--dF", "1"],
    "monotone-flat": ["monotone", "--regime", "flat", "--m", "4", "--p", "1", "--profile", "identity",
                      "--field", "linear-coordinate", "--rho-min", "0.1", "--rho-max", "10", "--n", "50"],
    "monotone-hyperbolic": ["monotone", "--regime", "pinched_neg", "--alpha", "1", "--beta", "1",
                            "--m", "5", "--p", "1", "--profile", "identity", "--manifold", "hyperbolic",
                            "--field", "equivariant-harmonic", "--rho-min", "0.1", "--rho-max", "10",
                            "--n", "50"],
    "stokes-harmonic": ["stokes-check", "--profile", "identity", "--field", "harmonic-quadratic",
                        "--grid", "129", "--box=-0.5:0.5"],
    "varcheck-efg": ["varcheck", "--which", "efg", "--profile", "bi-plus", "--grid", "64", "--h", "0.03125"],
    "varcheck-ym": ["varcheck", "--which", "ym", "--profile", "identity", "--grid", "64", "--h", "0.03125"],
    "bi-solve-plus": ["bi", "solve", "--sign", "plus", "--m", "2", "--C", "1", "--r", "2:3", "--n", "1024"],
    "bi-solve-minus": ["bi", "solve", "--sign", "minus", "--m", "3", "--C", "0.5", "--r", "2:3", "--n", "1024"],
    "doubling-euclidean": ["chern", "doubling", "--m", "3", "--radii", "0.1:10:25"],
    "doubling-hyperbolic": ["chern", "doubling", "--m", "2", "--manifold", "hyperbolic",
                            "--radii", "0.1:20:25"],
    "growth-q1": ["growth", "--q", "1", "--lam", "0.5"],
    "growth-q2": ["growth", "--q", "2", "--lam", "0.5"],
}


def cmd_preset(args, out: Output) -> int:
    if args.action == "list" or args.name is None:
        out.table(("name", "command"), [(k, " ".join(v)) for k, v in PRESETS.items()])
        return 0
    if args.name not in PRESETS:
        raise ConfigError(f"unknown preset {args.name!r}")
    argv = list(PRESETS[args.name]) + ["--seed", str(args.seed)]
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


# -- parser ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the config exit status
        raise ConfigError(f"{self.prog}: {message}")


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", help="write CSV here instead of stdout")
    sp.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")


def _regime_args(sp: argparse.ArgumentParser) -> None:
    for name in ("alpha", "beta", "A", "B", "eps", "q"):
        sp.add_argument(f"--{name}", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fenergy", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fenergy {__version__}")
    ap.add_argument("--config", help="key=value parameter file; flags override it")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("profile", help="degrees of a built-in profile")
    sp.add_argument("--name")
    sp.add_argument("--p", type=float)
    sp.add_argument("--samples", type=int, default=1024)
    _common(sp)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("exponents", help="monotonicity exponent for a curvature regime")
    sp.add_argument("--case")
    sp.add_argument("--m", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--dF", type=float)
    _regime_args(sp)
    _common(sp)
    sp.set_defaults(func=cmd_exponents)

    sp = sub.add_parser("monotone", help="ball-energy ratios E(rho)/rho^lambda")
    sp.add_argument("--regime")
    sp.add_argument("--m", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--profile")
    sp.add_argument("--profile-p", type=float)
    sp.add_argument("--field")
    sp.add_argument("--manifold", default="euclidean")
    sp.add_argument("--curvature-beta", type=float, default=1.0)
    sp.add_argument("--center")
    sp.add_argument("--rho-min", type=float, default=0.1)
    sp.add_argument("--rho-max", type=float, default=10.0)
    sp.add_argument("--n", type=int, default=50)
    _regime_args(sp)
    _common(sp)
    sp.set_defaults(func=cmd_monotone)

    sp = sub.add_parser("stokes-check", help="boundary vs volume form of the stress identity")
    sp.add_argument("--profile")
    sp.add_argument("--profile-p", type=float)
    sp.add_argument("--field")
    sp.add_argument("--grid", type=int, default=129)
    sp.add_argument("--box")
    sp.add_argument("--tol", type=float, default=2e-2)
    _common(sp)
    sp.set_defaults(func=cmd_stokes)

    sp = sub.add_parser("varcheck", help="first-variation formula on a random field")
    sp.add_argument("--which")
    sp.add_argument("--profile")
    sp.add_argument("--profile-p", type=float)
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--h", type=float, default=1.0 / 32)
    sp.add_argument("--tol", type=float, default=1e-3)
    _common(sp)
    sp.set_defaults(func=cmd_varcheck)

    sp = sub.add_parser("bi", help="Born-Infeld radial solver, duality and bounds")
    sp.add_argument("action", choices=("solve", "dualize", "bound", "energy"))
    sp.add_argument("--sign")
    sp.add_argument("--m", type=int)
    sp.add_argument("--C", type=float)
    sp.add_argument("--r")
    sp.add_argument("--n", type=int, default=1024)
    sp.add_argument("--in", dest="input")
    sp.add_argument("--sigma-out")
    sp.add_argument("--rho", type=float)
    sp.add_argument("--center")
    sp.add_argument("--pde-check", action="store_true")
    _common(sp)
    sp.set_defaults(func=cmd_bi)

    sp = sub.add_parser("chern", help="flux bounds and the doubling diagnostic")
    sp.add_argument("action", choices=("flux", "punctured", "spacelike", "doubling"))
    sp.add_argument("--in", dest="input")
    sp.add_argument("--radii", help="lo:hi:count")
    sp.add_argument("--plane", help="comma-separated axes spanning the plane")
    sp.add_argument("--center")
    sp.add_argument("--r0", type=float)
    sp.add_argument("--C1", type=float, default=1.0)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--manifold", default="euclidean")
    sp.add_argument("--curvature-beta", type=float, default=1.0)
    _common(sp)
    sp.set_defaults(func=cmd_chern)

    sp = sub.add_parser("growth", help="slow-divergence and little-o verdicts")
    sp.add_argument("--psi", default="log-power", choices=("log-power",))
    sp.add_argument("--q", type=float, default=1.0)
    sp.add_argument("--lam", "--lambda", dest="lam", type=float)
    sp.add_argument("--energy", default="log")
    sp.add_argument("--rho-min", type=float, default=10.0)
    sp.add_argument("--rho-max", type=float, default=1e10)
    sp.add_argument("--n", type=int, default=200)
    _common(sp)
    sp.set_defaults(func=cmd_growth)

    sp = sub.add_parser("preset", help="list or run the named experiment presets")
    sp.add_argument("action", choices=("list", "run"))
    sp.add_argument("name", nargs="?")
    _common(sp)
    sp.set_defaults(func=cmd_preset)
    return ap


def read_config(path: str) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _apply_config(ap: argparse.ArgumentParser, argv: list[str], path: str) -> None:
    """Install config values as defaults of the chosen subparser."""
    cfg = read_config(path)
    sub_action = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub_action.choices), None)
    if command is None:
        raise ConfigError("no subcommand given")
    sp = sub_action.choices[command]
    known = {a.dest: a for a in sp._actions if a.dest not in ("help", "func")}
    unknown = sorted(set(cfg) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    defaults = {}
    for key, raw in cfg.items():
        act = known[key]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                defaults[key] = act.type(raw)
            except ValueError:
                raise ConfigError(f"config key {key}: bad value {raw!r}") from None
        else:
            defaults[key] = raw
        if act.choices is not None and defaults[key] not in act.choices:
            raise ConfigError(f"config key {key}: {raw!r} not in {sorted(act.choices)}")
    sp.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        if "--config" in argv:
            i = argv.index("--config")
            if i + 1 >= len(argv):
                raise ConfigError("--config needs a path")
            path = argv[i + 1]
            argv = argv[:i] + argv[i + 2:]
            _apply_config(ap, argv, path)
        args = ap.parse_args(argv)
        if args.command is None:
            ap.print_help(sys.stderr)
            return 2
        out = Output(args)
        with np.errstate(all="ignore"):
            status = args.func(args, out)
        if args.command != "preset" or args.action == "list" or args.name is None:
            out.flush()
        return status
    except CheckFailed as exc:
        sys.stderr.write(f"fenergy: check failed: {exc}\n")
        return exc.exit_code
    except FEnergyError as exc:
        sys.stderr.write(f"fenergy: {type(exc).__name__}: {exc}\n")
        return exc.exit_code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
