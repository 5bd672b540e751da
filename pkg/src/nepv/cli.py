"""Command line driver.

Usage::

    nepv run|sweep-alpha|single-step|order --config <path> [--jobs N] [--out DIR]

Exit codes: 0 on success (``run``: converged), 1 on non-convergence, 2 on a
configuration error. ``NEPV_LOG`` (error, info or debug) sets the
verbosity of the diagnostics written to standard error.
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .analysis import estimate_order, single_step_study
from .config import ConfigError, initial_guess, load_config
from .solvers import SolverConfig, reference_solution, solve

log = logging.getLogger("nepv")

SUMMARY_KEYS = ("method", "problem", "alpha", "status", "iterations", "final_residual", "est_order")

SUMMARY_SCHEMA = {
    "type": "object",
    "required": list(SUMMARY_KEYS),
    "properties": {
        "method": {"type": "string"},
        "problem": {"type": "string"},
        "alpha": {"type": "number"},
        "status": {"type": "string"},
        "iterations": {"type": "integer"},
        "final_residual": {"type": ["number", "null"]},
        "est_order": {"type": ["number", "null"]},
    },
}


def fmt(x):
    """Shortest round-trip text for a float; empty for missing values."""
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    return repr(x)


def _finite_or_none(x):
    return None if x is None or not np.isfinite(x) else float(x)


def write_trace_csv(path, trace, p):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "error", "residual", "orth_defect"] + [f"eig_{i + 1}" for i in range(p)])
        w.writerow([0, fmt(trace.initial_error), fmt(trace.initial_residual),
                    fmt(np.linalg.norm(trace.initial.T @ trace.initial - np.eye(p)))] + [""] * p)
        for r in trace.records:
            eigs = list(np.atleast_1d(r.eigenvalues))[:p]
            eigs += [None] * (p - len(eigs))
            w.writerow([r.iter, fmt(r.error), fmt(r.residual), fmt(r.orth_defect)] + [fmt(e) for e in eigs])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def run_case(problem, solver, V0):
    """Solve, then attach errors against a polished reference solution."""
    trace = solve(problem, solver, V0)
    est = None
    if trace.converged:
        try:
            ref = reference_solution(problem, trace.final.V, solver.selection)
            trace.set_reference(ref)
            est = estimate_order(trace).order
        except (RuntimeError, ValueError) as exc:
            log.info("no order estimate for %s: %s", solver.method, exc)
    return trace, est


def summary(trace, est, problem_name, alpha):
    return {
        "method": trace.method,
        "problem": problem_name,
        "alpha": float(alpha),
        "status": trace.status,
        "iterations": trace.iterations,
        "final_residual": _finite_or_none(trace.residuals[-1]) if trace.iterations else None,
        "est_order": _finite_or_none(est),
    }


def _solver_for(cfg, method):
    s = cfg.solver
    return SolverConfig(method, s.tol, s.max_iter, s.selection, s.inexact_budget)


def cmd_run(cfg, out, jobs=1):
    problem = cfg.make_problem()
    V0 = initial_guess(problem, cfg.init, cfg.seed, cfg.solver.selection)
    trace, est = run_case(problem, cfg.solver, V0)
    os.makedirs(out, exist_ok=True)
    write_trace_csv(os.path.join(out, "trace.csv"), trace, problem.p)
    _write_json(os.path.join(out, "summary.json"), summary(trace, est, cfg.family, cfg.alpha))
    log.info("%s: %s after %d iterations", cfg.solver.method, trace.status, trace.iterations)
    return 0 if trace.converged else 1


def cmd_sweep_alpha(cfg, out, jobs=1):
    if not cfg.alphas:
        raise ConfigError("study.alphas must list at least one value for sweep-alpha")
    cells = [(a, m) for a in cfg.alphas for m in cfg.methods]

    def run_cell(cell):
        alpha, method = cell
        d = os.path.join(out, f"alpha={fmt(alpha)}", method)
        os.makedirs(d, exist_ok=True)
        try:
            problem = cfg.make_problem(alpha)
            V0 = initial_guess(problem, cfg.init, cfg.seed, cfg.solver.selection)
            trace, est = run_case(problem, _solver_for(cfg, method), V0)
        except Exception as exc:  # recorded per cell; the sweep continues
            log.error("cell alpha=%g method=%s failed: %s", alpha, method, exc)
            _write_json(os.path.join(d, "summary.json"), {
                "method": method, "problem": cfg.family, "alpha": float(alpha),
                "status": f"failed: {exc}", "iterations": 0, "final_residual": None, "est_order": None,
            })
            return [fmt(alpha), method, "", "", ""], False
        write_trace_csv(os.path.join(d, "trace.csv"), trace, problem.p)
        _write_json(os.path.join(d, "summary.json"), summary(trace, est, cfg.family, alpha))
        iters = trace.iterations if trace.converged else None
        final = trace.residuals[-1] if trace.iterations else None
        return [fmt(alpha), method, "" if iters is None else iters, fmt(final), fmt(est)], trace.converged

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            rows = list(pool.map(run_cell, cells))
    else:
        rows = [run_cell(c) for c in cells]
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "method", "iters_to_tol", "final_residual", "est_order"])
        for row, _ in rows:
            w.writerow(row)
    return 0 if all(ok for _, ok in rows) else 1


def cmd_single_step(cfg, out, jobs=1):
    alphas = [a for a in cfg.alphas if a > 0]
    if not alphas:
        raise ConfigError("study.alphas must list positive values for single-step")
    problem = cfg.make_problem()
    if problem.p != 1:
        raise ConfigError("single-step requires a problem with p = 1")
    v0 = initial_guess(problem, cfg.init, cfg.seed, cfg.solver.selection)[:, 0]
    try:
        rep = single_step_study(problem, v0, alphas, cfg.solver.selection, jobs=jobs)
    except RuntimeError as exc:
        log.error("single-step study failed: %s", exc)
        return 1
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "single_step.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "err_A", "err_J", "pred_A", "pred_J"])
        for row in zip(rep.alphas, rep.err_A, rep.err_J, rep.pred_A, rep.pred_J):
            w.writerow([fmt(x) for x in row])
    _write_json(os.path.join(out, "single_step.json"), {
        "problem": cfg.family, "slope_A": rep.slope_A, "slope_J": rep.slope_J,
        "coeff_A": rep.coeff_A, "coeff_J": rep.coeff_J,
    })
    return 0


def cmd_order(cfg, out, jobs=1):
    problem = cfg.make_problem()
    V0 = initial_guess(problem, cfg.init, cfg.seed, cfg.solver.selection)

    def one(method):
        d = os.path.join(out, method)
        os.makedirs(d, exist_ok=True)
        trace, _ = run_case(problem, _solver_for(cfg, method), V0)
        write_trace_csv(os.path.join(d, "trace.csv"), trace, problem.p)
        doc = {"method": method, "problem": cfg.family, "alpha": float(cfg.alpha), "status": trace.status,
               "order": None, "fit_window": None, "r_squared": None}
        if trace.converged and np.isfinite(trace.initial_error):
            try:
                est = estimate_order(trace)
                doc.update(order=est.order, fit_window=list(est.fit_window), r_squared=est.r_squared)
            except ValueError as exc:
                doc["status"] = f"{trace.status}; {exc}"
        _write_json(os.path.join(d, "order.json"), doc)
        return doc["order"] is not None

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            ok = list(pool.map(one, cfg.methods))
    else:
        ok = [one(m) for m in cfg.methods]
    return 0 if all(ok) else 1


COMMANDS = {
    "run": cmd_run,
    "sweep-alpha": cmd_sweep_alpha,
    "single-step": cmd_single_step,
    "order": cmd_order,
}


def _setup_logging():
    level = os.environ.get("NEPV_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="nepv", description="Solvers for eigenvector-dependent eigenvalue problems")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    args = parser.parse_args(argv)
    _setup_logging()
    try:
        cfg = load_config(args.config)
        out = args.out or cfg.output_dir
        return COMMANDS[args.command](cfg, out, max(1, args.jobs))
    except ConfigError as exc:
        print(f"nepv: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
