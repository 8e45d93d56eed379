"""Command line entry point: ``ftsheat run | sweep | oracle``.

Exit codes: 0 success, 1 configuration error, 2 numerical abort,
3 a settling bound was violated (only with --strict).
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .errors import ConfigError, NumericalAbort
from .experiment import SweepError, run_experiment, sweep_mu
from .config import load_config
from .stepper import (
    scalar_nonlinear_settling_time, scalar_oracle_nonlinear, scalar_oracle_sign,
    scalar_sign_settling_time,
)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_BOUND = 0, 1, 2, 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_run_options(p):
    p.add_argument("config", help="TOML configuration file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--dt", type=float, help="override the time step")
    p.add_argument("--n", type=int, help="override the number of interior nodes")
    p.add_argument("--t-end", type=float, dest="t_end", help="override the final time")
    p.add_argument("--strict", action="store_true", help="exit 3 if a settling bound is violated")
    p.add_argument("--backend", choices=("python", "cython"), help="kernel backend")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftsheat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_run_options(p)

    p = sub.add_parser("sweep", help="fractional-power runs over several mu values")
    _add_run_options(p)
    p.add_argument("--mu", type=_float_list, required=True, help="e.g. 0.2,0.5,0.8")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("oracle", help="print the closed-form scalar solution")
    p.add_argument("kind", choices=("scalar", "nonlinear"))
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--d", type=float, default=0.25, help="constant disturbance (scalar)")
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--t-end", type=float, dest="t_end", default=None)
    p.add_argument("--points", type=int, default=11)
    return parser


def _overrides(args) -> dict:
    return {"dt": args.dt, "n": args.n, "t_end": args.t_end}


def _report(reports) -> bool:
    ok = True
    for r in reports:
        status = "ok" if r["satisfied"] else "VIOLATED"
        t_num = "not settled" if r["t_numeric"] is None else f"{r['t_numeric']:.6g}"
        print(f"{r['theorem']}: T_numeric = {t_num}, T_bound = {r['t_bound']:.6g} [{status}]")
        ok = ok and r["satisfied"]
    return ok


def cmd_run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    summary = run_experiment(cfg, args.out, backend=args.backend)
    ok = _report(summary.reports)
    for k, v in summary.certificates.items():
        print(f"{k}: {v}")
    print(f"wrote {args.out} ({summary.steps} steps, {summary.wall_clock:.3f}s, {summary.backend})")
    return EXIT_BOUND if (args.strict and not ok) else EXIT_OK


def cmd_sweep(args) -> int:
    base = load_config(args.config, _overrides(args))
    try:
        rows = sweep_mu(base, args.mu, args.out, workers=args.workers, backend=args.backend)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ok = True
    for r in rows:
        t_num = "not settled" if r["t_numeric"] is None else f"{r['t_numeric']:.6g}"
        print(f"mu = {r['mu']:g}: T_numeric = {t_num}, T_bound = {r['t_bound_thm4']:.6g}")
        ok = ok and r["satisfied"]
    return EXIT_BOUND if (args.strict and not ok) else EXIT_OK


def cmd_oracle(args) -> int:
    try:
        if args.kind == "scalar":
            T = scalar_sign_settling_time(args.y0, args.rho, args.d)
            f = lambda t: scalar_oracle_sign(args.y0, args.rho, args.d, t)  # noqa: E731
        else:
            T = scalar_nonlinear_settling_time(args.y0, args.mu)
            f = lambda t: scalar_oracle_nonlinear(args.y0, args.mu, t)  # noqa: E731
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t_end = args.t_end if args.t_end is not None else 1.25 * T
    print(f"# settling time {T:.17g}")
    print("t,y")
    for t in np.linspace(0.0, t_end, max(args.points, 2)):
        print(f"{t:.17g},{f(t):.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except SweepError as exc:
        causes = [e for _, e in exc.failures]
        print(f"sweep failed: {exc}", file=sys.stderr)
        if all(isinstance(e, ConfigError) for e in causes):
            return EXIT_CONFIG
        return EXIT_ABORT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
