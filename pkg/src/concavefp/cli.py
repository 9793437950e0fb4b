"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
3 infeasible verdict.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import lte
from .accel import build_accelerated, iterate_accelerated
from .certify import Verdict, capacity_prune, certify_necessary, certify_sufficient_affine
from .errors import ConcaveFPError, SpectralRadiusTooLarge
from .experiment import ExperimentConfig, run_nme, write_csv
from .lower_bound import LowerBoundingMatrix, Route, build_matrix
from .mapping import DEFAULT_MAX_ITER, DEFAULT_TOL, fixed_point_residual, iterate_standard
from .spectral import spectral_radius

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3
SEED_ENV = "CONCAVEFP_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vec(v) -> str:
    return ",".join(f"{x:.17g}" for x in v)


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        field = lte.RadioParams.__dataclass_fields__.get(key)
        if field is None:
            raise UsageError(f"unknown scenario parameter {key!r}")
        default = field.default
        out[key] = type(default)(value) if not isinstance(default, str) else value
    return out


def _load_scenario(path, demand_scale=1.0) -> lte.NetworkScenario:
    try:
        scn = lte.NetworkScenario.load(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scenario {path}: {exc}") from exc
    return scn.scale_demands(demand_scale) if demand_scale != 1.0 else scn


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def cmd_gen_scenario(args) -> int:
    params = lte.RadioParams.from_dict(_parse_overrides(args.set))
    scn = lte.generate_scenario(params, np.random.default_rng(args.seed), prune=not args.keep_empty)
    if args.demand_scale != 1.0:
        scn = scn.scale_demands(args.demand_scale)
    scn.save(args.out)
    print(f"scenario={args.out}")
    print(f"stations={scn.n_bs}")
    print(f"users={scn.n_users}")
    return EXIT_OK


def cmd_certify(args) -> int:
    scn = _load_scenario(args.scenario, args.demand_scale)
    T = lte.load_mapping(scn)
    Mprime = lte.closed_form_Mprime(scn)
    cert = certify_necessary(T, lte.load_matrix(scn))
    if not cert.infeasible:
        cert = certify_sufficient_affine(T, lte.load_matrix(scn), None, model_specific=True)
        if args.capacity is not None:
            cert = capacity_prune(cert, np.full(scn.n_bs, args.capacity))
    print(f"rho_Mprime={spectral_radius(Mprime):.17g}")
    sys.stdout.write(cert.to_text())
    return EXIT_INFEASIBLE if cert.verdict is Verdict.INFEASIBLE else EXIT_OK


def _solve(T, M, args):
    if args.accelerated:
        return iterate_accelerated(build_accelerated(T, M), tol=args.tol, max_iter=args.max_iter)
    return iterate_standard(T, tol=args.tol, max_iter=args.max_iter)


def _report(T, trace) -> int:
    print(f"status={trace.status.value}")
    print(f"iterations={trace.n_iter}")
    print(f"residual={fixed_point_residual(T, trace.x):.6g}")
    print(f"fixed_point={_vec(trace.x)}")
    return EXIT_OK if trace.converged else EXIT_NUMERIC


def cmd_solve_load(args) -> int:
    scn = _load_scenario(args.scenario, args.demand_scale)
    T = lte.load_mapping(scn, cap=args.cap)
    return _report(T, _solve(T, lte.load_matrix(scn), args))


def _target_load(scn, args) -> np.ndarray:
    if args.load:
        return np.array([float(v) for v in args.load.split(",")])
    T = lte.load_mapping(scn)
    trace = iterate_accelerated(build_accelerated(T, lte.load_matrix(scn)), tol=1e-12)
    return trace.x


def cmd_solve_power(args) -> int:
    scn = _load_scenario(args.scenario, args.demand_scale)
    nu = _target_load(scn, args)
    T = lte.power_mapping(scn, nu, cap=args.cap)
    print(f"load={_vec(nu)}")
    return _report(T, _solve(T, lte.power_matrix(scn, nu), args))


def cmd_lower_bound(args) -> int:
    scn = _load_scenario(args.scenario, args.demand_scale)
    if args.mapping == "load":
        T, closed = lte.load_mapping(scn), lte.load_matrix(scn)
    else:
        nu = _target_load(scn, args)
        T, closed = lte.power_mapping(scn, nu), lte.power_matrix(scn, nu)
    route = Route(args.route)
    if route is Route.CLOSED_FORM:
        L = LowerBoundingMatrix.closed_form(closed)
    else:
        L = build_matrix(T, route)
    if args.out:
        L.to_csv(args.out)
        print(f"matrix={args.out}")
    else:
        sys.stdout.write(f"n={L.dimension},route={L.route.value}\n")
        for row in L.M:
            print(_vec(row))
    print(f"rho={L.rho():.17g}", file=sys.stderr)
    return EXIT_OK


def cmd_nme_experiment(args) -> int:
    if args.config:
        try:
            cfg = ExperimentConfig.from_file(args.config)
        except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    else:
        cfg = ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("runs", "seed", "budget", "mode") if getattr(args, k) is not None}
    if "seed" not in overrides and not args.config:
        overrides["seed"] = _default_seed()
    cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    curve = run_nme(cfg)
    write_csv(curve, args.out)
    print(f"csv={args.out}")
    print(f"runs={cfg.runs}")
    print(f"discarded={curve.discarded}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="concavefp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_cmd(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--demand-scale", type=float, default=1.0, help="multiply all user demands")
        return sp

    def solver_opts(sp, cap):
        sp.add_argument("--accelerated", action="store_true", help="iterate the accelerated mapping")
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
        sp.add_argument("--cap", type=float, default=cap, help="per-component divergence cap")

    g = sub.add_parser("gen-scenario", help="draw a scenario from the default network parameters")
    g.add_argument("--seed", type=int, default=_default_seed(), help=f"RNG seed (default ${SEED_ENV} or 0)")
    g.add_argument("--out", required=True)
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a network parameter")
    g.add_argument("--demand-scale", type=float, default=1.0)
    g.add_argument("--keep-empty", action="store_true", help="keep stations without users")
    g.set_defaults(func=cmd_gen_scenario)

    c = scenario_cmd("certify", "spectral-radius feasibility certificate for the load mapping")
    c.add_argument("--capacity", type=float, default=None, help="prune when the load lower bound exceeds this")
    c.set_defaults(func=cmd_certify)

    s = scenario_cmd("solve-load", "fixed point of the load mapping")
    solver_opts(s, lte.DEFAULT_LOAD_CAP)
    s.set_defaults(func=cmd_solve_load)

    s = scenario_cmd("solve-power", "power vector inducing a target load")
    solver_opts(s, lte.DEFAULT_POWER_CAP)
    s.add_argument("--load", help="comma-separated target load (default: load induced by the scenario powers)")
    s.set_defaults(func=cmd_solve_power)

    lb = scenario_cmd("lower-bound", "lower bounding matrix as CSV")
    lb.add_argument("--mapping", choices=["load", "power"], default="load")
    lb.add_argument("--route", choices=[r.value for r in Route], default=Route.RECESSION.value)
    lb.add_argument("--load", help="target load for --mapping power")
    lb.add_argument("--out")
    lb.set_defaults(func=cmd_lower_bound)

    e = sub.add_parser("nme-experiment", help="Monte-Carlo NME curves to CSV")
    e.add_argument("--config", help="JSON experiment config")
    e.add_argument("--runs", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--budget", type=int)
    e.add_argument("--mode", choices=["load", "power"])
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_nme_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpectralRadiusTooLarge as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConcaveFPError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
