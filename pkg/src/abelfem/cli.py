"""``abelfem`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import _accel
from .admissibility import evaluate
from .assembly import AssemblyError, assemble, dump_system
from .config import ConfigError, _int_list, parse_admissibility, parse_config
from .mesh import build_space, build_uniform_mesh
from .norms import SpectralNormEvaluator
from .operator import get_problem
from .quadrature import QuadPolicy, moment_table
from .solve import SingularSystemError, solve
from .studies import (
    ConvergenceReport,
    Row,
    StudyError,
    parse_order_mode,
    run_alpha_sweep,
    run_convergence,
    run_fixed_order_study,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _n_list(text):
    try:
        return _int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad N list {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _common(p):
    p.add_argument("--config", help="key = value file with a [study] section")
    p.add_argument("--problem", help="exp1, exp2:alpha=<a> or manufactured:p=<p>,alpha=<a>,kernel=one|exp1")
    p.add_argument("--m", type=int, help="polynomial degree")
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-list", type=_n_list, help="e.g. 32,64,128 or 2^5,2^6")
    p.add_argument("--order-mode", help="s1..s5 or fixed:<k>")
    p.add_argument("--beta", type=float, help="norm order (default -alpha/2)")
    p.add_argument("--n-modes", type=int, help="cosine modes (default max(4096, 16 N))")
    p.add_argument("--n-max", type=int, help="cap on the separated-pair order")
    p.add_argument("--threads", type=int, help="worker threads (fallback: ABELFEM_THREADS)")
    p.add_argument("--out-csv")
    p.add_argument("--out-svg")
    p.add_argument("--ref-slope", type=float, dest="reference_slope", help="slope of the dashed guide line")
    p.add_argument("--allow-large", action="store_true", default=None, help="permit N > 1024 for m >= 1")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="abelfem", description="Galerkin solver for Abel-type integral equations")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="one mesh: assemble, solve, report the error")
    _common(p)
    p.add_argument("--n", type=int, help="number of elements (shorthand for a one-entry --n-list)")
    p.add_argument("--dump", help="write A and r in the binary block format")

    p = sub.add_parser("convergence", help="error table over --n-list")
    _common(p)

    p = sub.add_parser("fixed-order", help="one convergence table per fixed separated-pair order")
    _common(p)
    p.add_argument("--orders", type=_n_list, dest="fixed_orders")
    p.add_argument("--pollution-factor", type=float)

    p = sub.add_parser("alpha-sweep", help="relative error of the alpha family at fixed N")
    _common(p)
    p.add_argument("--n", type=int, help="mesh size (default: last of --n-list)")
    p.add_argument("--alphas", type=_float_list)

    p = sub.add_parser("quad-check", help="moment errors of the Gauss rules")
    p.add_argument("--n-max", type=int, default=20)

    p = sub.add_parser("admissibility", help="coercivity check from an [admissibility] section")
    p.add_argument("--config")
    p.add_argument("--alpha", type=float)
    p.add_argument("--C-c", type=float, dest="C_c", help="continuity constant (default 1)")
    return ap


_STUDY_FLAGS = (
    "problem", "m", "alpha", "n_list", "order_mode", "beta", "n_modes", "n_max", "threads",
    "out_csv", "out_svg", "reference_slope", "allow_large", "fixed_orders", "pollution_factor", "alphas",
)


def _study_config(args):
    overrides = {k: getattr(args, k, None) for k in _STUDY_FLAGS}
    if getattr(args, "n", None) is not None:
        overrides["n_list"] = [args.n]
    if overrides["threads"] is None:
        try:
            overrides["threads"] = _accel.default_threads()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    config = parse_config(args.config, overrides)
    # surface problem-spec errors as configuration errors
    try:
        get_problem(config.problem, config.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def _print_report(report: ConvergenceReport, out):
    print(f"# {report.label}", file=out)
    print(f"{'N':>7} {'M':>7} {'error':>12} {'rel_error':>12} {'rate':>7}", file=out)
    for r in report.rows:
        rate = "" if math.isnan(r.rate) else f"{r.rate:7.3f}"
        print(f"{r.N:7d} {r.M:7d} {r.error:12.4e} {r.rel_error:12.4e} {rate:>7}", file=out)
    if len(report.rows) > 1:
        print(f"slope {report.slope:.4f} (residual {report.slope_residual:.2e})", file=out)


def cmd_solve(args, out):
    config = _study_config(args)
    problem = get_problem(config.problem, config.alpha)
    evaluator = SpectralNormEvaluator(config.n_modes)
    rows = []
    for N in config.n_list:
        space = build_space(build_uniform_mesh(N), config.m)
        kw = parse_order_mode(config.order_mode)
        policy = QuadPolicy(config.m, problem.alpha, 1.0 / N, lambda_K=problem.kernel.lambda_K, n_max=config.n_max, **kw)
        system = assemble(space, problem, policy, threads=config.threads)
        if args.dump:
            dump_system(system, args.dump)
        rep = solve(system, space)
        if problem.exact is None:
            print(f"N={N} M={space.dim} method={rep.method} residual={rep.residual_inf:.3e}", file=out)
            continue
        err, rel = evaluator.error(problem, rep.solution, config.beta)
        if not (math.isfinite(err) and math.isfinite(rel)):
            raise StudyError(f"non-finite error at N={N}")
        rows.append(Row(N, 1.0 / N, space.dim, err, rel))
        print(f"N={N} M={space.dim} error={err:.6e} rel_error={rel:.6e} method={rep.method} residual={rep.residual_inf:.3e}", file=out)
    for note in problem.notes:
        print(f"note: {note}", file=out)
    if config.out_csv and rows:
        ConvergenceReport(rows, config.order_mode).to_csv(config.out_csv)


def cmd_convergence(args, out):
    _print_report(run_convergence(_study_config(args)), out)


def cmd_fixed_order(args, out):
    config = _study_config(args)
    study = run_fixed_order_study(config)
    for rep in study.reports.values():
        _print_report(rep, out)
    lo, hi = min(study.reports), max(study.reports)
    print(f"error ratio n1={lo} / n1={hi} at N={config.n_list[-1]}: {study.pollution_ratio:.3f}"
          f" ({'polluted' if study.polluted else 'clean'})", file=out)


def cmd_alpha_sweep(args, out):
    config = _study_config(args)
    rows = run_alpha_sweep(config)
    print(f"{'alpha':>6} {'N':>6} {'M':>6} {'error':>12} {'rel_error':>12}", file=out)
    for r in rows:
        print(f"{r.alpha:6.2f} {r.N:6d} {r.M:6d} {r.error:12.4e} {r.rel_error:12.4e}", file=out)


def cmd_quad_check(args, out):
    if args.n_max < 1:
        raise ConfigError("--n-max must be >= 1")
    print(f"{'rule':<24} {'n':>3} {'max rel moment error':>22}", file=out)
    for fam, n, err in moment_table(args.n_max, n_max_jacobi=min(args.n_max, 15)):
        print(f"{fam:<24} {n:3d} {err:22.3e}", file=out)


def cmd_admissibility(args, out):
    inp = parse_admissibility(args.config, args.alpha, args.C_c)
    rep = evaluate(inp)
    print(f"alpha       {inp.alpha:.17g}", file=out)
    print(f"gamma       {rep.gamma:.17g}", file=out)
    print(f"C_s^2       {rep.C_s2:.17g}", file=out)
    print(f"gamma_tilde {rep.gamma_tilde:.17g}", file=out)
    print(f"admissible  {'true' if rep.admissible else 'false'}", file=out)


COMMANDS = {
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "fixed-order": cmd_fixed_order,
    "alpha-sweep": cmd_alpha_sweep,
    "quad-check": cmd_quad_check,
    "admissibility": cmd_admissibility,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"abelfem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, AssemblyError, StudyError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"abelfem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"abelfem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main_entry():  # console script
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
