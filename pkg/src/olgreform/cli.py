"""Command-line front end: solve scenarios, compare them and post-process.

    olgreform transition --scenario baseline --reform none --out runs/base
    olgreform compare --a baseline:none --b baseline:rr50 --out runs/cmp
    olgreform welfare --scenario retire_ext --reform ltc10 --out runs/wf

Exit codes: 0 success, 2 usage error, 3 non-convergence, 4 data or
configuration validation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import equilibrium as eq
from .errors import ConvergenceError, DataLoadError, UnknownScenario, ValidationError
from .io_config import (emit_results, load_config, load_inputs, policy_from_inputs, run_manifest,
                        write_csv)
from .policy import REFORM_ALIASES, REFORMS, SCENARIOS, build_scenario, canonical_reform
from .welfare import growth_decomposition, welfare_table

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_DATA = 0, 2, 3, 4
COMMANDS = ("steady-state", "transition", "compare", "welfare", "decompose")
REFERENCE = "baseline:none"

log = logging.getLogger("olgreform")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _run_id(text: str) -> tuple:
    """Parse ``scenario:reform`` (reform defaults to ``none``)."""
    scenario, _, reform = text.partition(":")
    if scenario not in SCENARIOS:
        raise argparse.ArgumentTypeError(
            f"unknown scenario {scenario!r}; valid scenarios: {', '.join(SCENARIOS)}")
    try:
        return scenario, canonical_reform(reform or "none")
    except UnknownScenario as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    reforms = ", ".join(REFORMS + tuple(REFORM_ALIASES))
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="INI configuration file (defaults are used when omitted)")
    g.add_argument("--data-dir", help="directory holding the input CSV files "
                   "(default: $OLGREFORM_DATA_DIR or the bundled data)")
    g.add_argument("--out", default="results", help="output directory (default: results)")
    g.add_argument("--damping", type=float, help="fixed-point damping in (0, 1]")
    g.add_argument("--tol", type=float, help="convergence tolerance on the largest path change")
    g.add_argument("--max-iter", type=int, help="maximum fixed-point iterations")
    g.add_argument("-v", "--verbose", action="count", default=0,
                   help="log solver progress (-vv for per-iteration detail)")

    single = argparse.ArgumentParser(add_help=False)
    s = single.add_argument_group("scenario")
    s.add_argument("--scenario", default="baseline", choices=SCENARIOS,
                   help="retirement-age scenario (default: baseline)")
    s.add_argument("--reform", default="none", type=_reform,
                   help=f"social-security reform: {reforms} (default: none)")

    workers = argparse.ArgumentParser(add_help=False)
    workers.add_argument("--workers", type=int, default=1,
                         help="processes used to solve independent runs (default: 1)")

    ap = _Parser(prog="olgreform", description=__doc__.splitlines()[0],
                 epilog="Exit codes: 0 success, 2 usage, 3 non-convergence, 4 data validation.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND",
                            parser_class=_Parser)
    p = sub.add_parser("steady-state", parents=[common, single],
                       help="solve the initial (or terminal) stationary equilibrium")
    p.add_argument("--terminal", action="store_true",
                   help="solve the terminal stationary equilibrium instead of the initial one")
    sub.add_parser("transition", parents=[common, single],
                   help="solve the transition path for one scenario and reform")
    p = sub.add_parser("compare", parents=[common, workers],
                       help="solve two runs and emit their difference series")
    p.add_argument("--a", type=_run_id, default=("baseline", "none"), metavar="SCENARIO:REFORM",
                   help="reference run (default: baseline:none)")
    p.add_argument("--b", type=_run_id, default=("baseline", "rr50"), metavar="SCENARIO:REFORM",
                   help="comparison run (default: baseline:rr50)")
    p = sub.add_parser("welfare", parents=[common, single, workers],
                       help="welfare changes of a run relative to the current policy")
    p.add_argument("--reference", type=_run_id, default=_run_id(REFERENCE),
                   metavar="SCENARIO:REFORM", help=f"reference run (default: {REFERENCE})")
    sub.add_parser("decompose", parents=[common, single],
                   help="output-growth decomposition along the transition path")
    return ap


def _reform(text: str) -> str:
    try:
        return canonical_reform(text)
    except UnknownScenario as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _config(args):
    cfg = load_config(args.config, data_dir=args.data_dir)
    return cfg.with_solver(damping=args.damping, tol=args.tol, max_iter=args.max_iter)


def solve_run(cfg, scenario: str, reform: str, inputs=None, initial=None):
    """Transition path for one (scenario, reform) pair."""
    inputs = inputs if inputs is not None else load_inputs(cfg)
    years = cfg.start_year + np.arange(cfg.solver.horizon)
    sc = build_scenario(scenario, reform, years, policy_from_inputs(cfg, inputs))
    initial = initial if initial is not None else eq.solve_steady_state(cfg, inputs)
    return eq.solve_transition(cfg, inputs, sc, initial=initial)


def _solve_many(cfg, inputs, runs, workers: int):
    """Solve ``runs`` (unique scenario/reform pairs) serially or in worker processes."""
    runs = list(dict.fromkeys(runs))
    if workers > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(runs))) as pool:
            futures = [pool.submit(solve_run, cfg, s, r) for s, r in runs]
            return dict(zip(runs, (f.result() for f in futures)))
    initial = eq.solve_steady_state(cfg, inputs)
    return {run: solve_run(cfg, *run, inputs=inputs, initial=initial) for run in runs}


def _manifest(args, cfg, inputs, label, paths, t0):
    m = run_manifest(cfg, inputs, label, iterations={p.label: p.iterations for p in paths},
                     residual={p.label: p.residual_trace[-1] for p in paths},
                     wall_clock=round(time.perf_counter() - t0, 3))
    m["command"] = args.command
    return m


def steady_state_rows(ss):
    gdp = ss.gdp[0]
    book = ss.book
    hours = np.nansum(ss.n[0] * np.nan_to_num(book.l[0]) * (book.efficiency[0] > 0))
    workers = np.sum(ss.n[0] * (book.efficiency[0] > 0))
    rows = [("gdp", gdp), ("k_t_over_gdp", ss.K_T[0] / gdp), ("k_i_over_gdp", ss.K_I[0] / gdp),
            ("c_over_gdp", ss.C[0] / gdp), ("c_plus_g_over_gdp", (ss.C[0] + ss.G[0]) / gdp),
            ("x_t_over_gdp", ss.X_T[0] / gdp),
            ("x_i_over_gdp", ss.X_I[0] / gdp), ("g_over_gdp", ss.G[0] / gdp),
            ("b_over_gdp", ss.B[0] / gdp), ("pension_over_gdp", ss.P[0] / gdp),
            ("health_over_gdp", (ss.M[0] + ss.oop[0]) / gdp), ("tau_c", ss.tauc[0]),
            ("w", ss.w[0]), ("i_k", ss.i_k[0]), ("r", ss.r[0]), ("psi", ss.psi[0]),
            ("mean_worker_hours", hours / workers)]
    return rows


def compare_rows(a, b):
    """Percent log-differences ``100 log(b/a)`` of levels and point changes of rates."""
    la, lb = a.level_gdp(), b.level_gdp()
    years = np.arange(a.report_start, a.report_end + 1)
    for y in years:
        t = y - a.years[0]
        yield (int(y), la[t], lb[t], 100.0 * (np.log(lb[t]) - np.log(la[t])),
               100.0 * (np.log(b.C[t]) - np.log(a.C[t])),
               a.tauc[t], b.tauc[t], 100.0 * (b.tauc[t] - a.tauc[t]))


COMPARE_COLUMNS = ("year", "gdp_a", "gdp_b", "gdp_pct_diff", "c_pct_diff", "tau_c_a", "tau_c_b",
                   "tau_c_pp_diff")


def _execute(args) -> int:
    t0 = time.perf_counter()
    cfg = _config(args)
    inputs = load_inputs(cfg)
    out = args.out
    if args.command == "steady-state":
        initial = eq.solve_steady_state(cfg, inputs)
        ss = initial
        if args.terminal:
            years = cfg.start_year + np.arange(cfg.solver.horizon)
            sc = build_scenario(args.scenario, args.reform, years, policy_from_inputs(cfg, inputs))
            ss = eq.terminal_steady_state(cfg, inputs, sc, guess=initial.state)
        label = f"{ss.label}:{args.scenario}:{args.reform}"
        emit_results(out, extra={"steady_state.csv": (("quantity", "value"), steady_state_rows(ss))},
                     manifest=_manifest(args, cfg, inputs, label, [ss], t0))
        return EXIT_OK
    if args.command in ("transition", "decompose"):
        path = solve_run(cfg, args.scenario, args.reform, inputs)
        dec = growth_decomposition(path, cfg.tech) if args.command == "decompose" else None
        emit_results(out, path=path, decomposition=dec,
                     manifest=_manifest(args, cfg, inputs, path.label, [path], t0))
        return EXIT_OK
    if args.command == "compare":
        runs = _solve_many(cfg, inputs, [args.a, args.b], args.workers)
        a, b = runs[args.a], runs[args.b]
        emit_results(out, extra={"compare.csv": (COMPARE_COLUMNS, compare_rows(a, b))},
                     manifest=_manifest(args, cfg, inputs, f"{a.label} vs {b.label}", [a, b], t0))
        return EXIT_OK
    if args.command == "welfare":
        run = (args.scenario, args.reform)
        runs = _solve_many(cfg, inputs, [args.reference, run], args.workers)
        ref, path = runs[args.reference], runs[run]
        table = welfare_table(ref, path, scenario=args.scenario, reform_id=args.reform)
        emit_results(out, path=path, welfare=table,
                     manifest=_manifest(args, cfg, inputs, f"{ref.label} vs {path.label}",
                                        [ref, path], t0))
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(message)s")
    logging.getLogger("numba").setLevel(logging.WARNING)
    try:
        return _execute(args)
    except ConvergenceError as exc:
        trace = ", ".join(f"{r:.3e}" for r in exc.residuals[-5:])
        print(f"error: {exc}\nlast residuals: {trace}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except UnknownScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
