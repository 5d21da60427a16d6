"""Command-line front end: ``rrextrap {run,compare,diagnose}``.

Exit codes: 0 converged (or report written), 1 configuration or unsupported
request, 2 cycle cap reached, 3 divergence, degree-detection failure or
degenerate window.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__, diagnostics, modes
from .config import load_config
from .errors import (ConfigError, DegreeDetectionError, DivergenceError, RREError,
                     UnsupportedDiagnosticError)

log = logging.getLogger("rrextrap")

LOG_ENV = "RREXTRAP_LOG_LEVEL"
RUN_COLUMNS = ["index", "residual_norm", "error_norm", "k_used", "gamma_abs_sum", "extrapolation_residual"]
EXIT_OK, EXIT_CONFIG, EXIT_MAX_CYCLES, EXIT_FAILURE = 0, 1, 2, 3

_EXIT_BY_TERMINATION = {
    modes.CONVERGED: EXIT_OK,
    modes.MAX_CYCLES: EXIT_MAX_CYCLES,
    modes.DIVERGED: EXIT_FAILURE,
    modes.DEGREE_FAILURE: EXIT_FAILURE,
    modes.DEGENERATE: EXIT_FAILURE,
}


def clean(obj):
    """Convert to JSON-safe builtins; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj):
    return json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _num(v):
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else ""


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trace_rows(trace):
    """CSV rows for every extrapolation record of a trace (the starting vector is skipped)."""
    rows = []
    for rec in trace.records:
        if rec.result is None:
            continue
        rows.append([rec.index, _num(rec.residual), _num(rec.error), rec.k_used,
                     _num(rec.result.gamma_abs_sum), _num(rec.result.residual_norm)])
    return rows


def trace_to_dict(trace):
    recs = []
    for rec in trace.records:
        d = {
            "index": rec.index, "s": rec.s, "residual_norm": rec.residual, "error_norm": rec.error,
            "f_evals": rec.f_evals, "k_used": rec.k_used, "eps_n_norm": rec.eps_n_norm,
        }
        if rec.result is not None:
            r = rec.result
            d["extrapolation"] = {
                "gamma": r.gamma, "xi": r.xi, "residual_norm": r.residual_norm,
                "gamma_abs_sum": r.gamma_abs_sum, "n": r.n, "k": r.k, "dim": r.dim,
                "w_rank": r.w_rank, "rank_deficient": r.rank_deficient, "converged": r.converged,
            }
        recs.append(d)
    return {"mode": trace.mode, "termination": trace.termination, "message": trace.message,
            "f_evals": trace.f_evals, "records": recs}


def _config_dict(cfg):
    m = cfg.mode
    return {
        "problem": {"name": cfg.problem_name, "params": cfg.problem_params, "seed": cfg.seed,
                    "x0": cfg.x0, "x0_error": cfg.x0_error},
        "mode": {"mode": m.mode, "n": m.n, "k": m.k, "max_cycles": m.max_cycles, "tol": m.tol,
                 "rank_tol": m.rank_tol, "degree_tol": m.degree_tol, "k_max": m.k_max},
        "diagnostics": {"enabled": cfg.diagnostics, "k_values": cfg.k_values, "delta": cfg.delta},
    }


def _problem_dict(spec, x0):
    return {"name": spec.name, "dim": spec.dim, "provenance": spec.provenance,
            "solution": spec.solution, "expected_degree": spec.expected_degree, "x0": x0}


def _jacobian_for(spec, x0, report_warnings):
    if spec.jacobian_at_solution is not None:
        return spec.jacobian_at_solution
    if spec.solution is not None:
        return diagnostics.jacobian_at(spec.problem, spec.solution)
    report_warnings.append("solution unknown: Jacobian evaluated at x0")
    return diagnostics.jacobian_at(spec.problem, x0)


def _run_trace(spec, x0, mode_cfg):
    """Run a mode; failures come back as the partial trace attached to the error."""
    try:
        return modes.run(spec.problem, x0, mode_cfg)
    except (DivergenceError, DegreeDetectionError) as exc:
        log.warning("%s", exc)
        return exc.trace


def _diagnostics_report(spec, x0, cfg, trace):
    warnings = []
    F = _jacobian_for(spec, x0, warnings)
    rep = diagnostics.build_report(F, cfg.k_values, trace, spec.solution, cfg.mode.rank_tol)
    rep.warnings = warnings + rep.warnings
    if not cfg.delta:
        rep.delta = []
    return rep


def cmd_run(cfg):
    spec, x0 = cfg.build_problem()
    trace = _run_trace(spec, x0, cfg.mode)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_text(os.path.join(cfg.out_dir, "run.csv"), _csv_text(RUN_COLUMNS, trace_rows(trace)))
    code = _EXIT_BY_TERMINATION[trace.termination]
    report = {"version": __version__, "config": _config_dict(cfg), "problem": _problem_dict(spec, x0),
              "trace": trace_to_dict(trace), "exit_code": code}
    if cfg.diagnostics:
        if cfg.delta and spec.solution is None:
            raise UnsupportedDiagnosticError("delta/H diagnostics need a problem with a known solution")
        report["diagnostics"] = _diagnostics_report(spec, x0, cfg, trace).to_dict()
    _write_text(os.path.join(cfg.out_dir, "report.json"), dumps(report))
    log.info("run: %s after %d records (exit %d)", trace.termination, len(trace.records), code)
    return code


def _leg_series(spec, x0, cfg, leg):
    """``[(f_evals, error_or_residual), ...]`` for one comparison leg."""
    value = (lambda r: r.error) if spec.solution is not None else (lambda r: r.residual)
    m = cfg.mode
    if leg == "plain":
        trace = modes.run_plain(spec.problem, x0, cfg.plain_max_iter, m.tol, m.escape_factor)
        return [(r.f_evals, value(r)) for r in trace.records], trace.termination
    mc = modes.ModeConfig(mode=leg, n=m.n, k=m.k, max_cycles=m.max_cycles, tol=m.tol, rank_tol=m.rank_tol,
                          degree_tol=m.degree_tol, k_max=m.k_max, escape_factor=m.escape_factor)
    trace = modes.run(spec.problem, x0, mc)
    return [(r.f_evals, value(r)) for r in trace.records], trace.termination


def cmd_compare(cfg):
    if not cfg.compare_modes:
        raise ConfigError("[compare] modes: empty mode list")
    spec, x0 = cfg.build_problem()
    series, summary = {}, {}
    for leg in cfg.compare_modes:
        try:
            series[leg], summary[leg] = _leg_series(spec, x0, cfg, leg)
        except (DivergenceError, DegreeDetectionError) as exc:
            log.warning("leg %s failed: %s", leg, exc)
            t = exc.trace
            series[leg] = [(r.f_evals, r.error if spec.solution is not None else r.residual)
                           for r in (t.records if t else [])]
            summary[leg] = t.termination if t else "failed"
    what = "error" if spec.solution is not None else "residual"
    evals = sorted({e for pts in series.values() for e, _ in pts})
    table = {leg: {} for leg in cfg.compare_modes}
    for leg, pts in series.items():
        for e, v in pts:
            table[leg][e] = v  # last value at a given count wins
    header = ["f_evals"] + [f"{leg}_{what}" for leg in cfg.compare_modes]
    rows = [[e] + [_num(table[leg].get(e)) for leg in cfg.compare_modes] for e in evals]
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_text(os.path.join(cfg.out_dir, "compare.csv"), _csv_text(header, rows))
    _write_text(os.path.join(cfg.out_dir, "compare.json"),
                dumps({"version": __version__, "config": _config_dict(cfg), "legs": summary,
                       "series": {leg: [[e, v] for e, v in pts] for leg, pts in series.items()}}))
    return EXIT_OK


def cmd_diagnose(cfg):
    spec, x0 = cfg.build_problem()
    if cfg.delta and spec.solution is None:
        raise UnsupportedDiagnosticError("delta/H diagnostics need a problem with a known solution")
    trace = _run_trace(spec, x0, cfg.mode)
    rep = _diagnostics_report(spec, x0, cfg, trace)
    if not spec.contractive or rep.L_estimate >= 1.0:
        log.warning("non-contraction: L = %.6g", rep.L_estimate)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_text(os.path.join(cfg.out_dir, "diagnostics.json"),
                dumps({"version": __version__, "config": _config_dict(cfg), "problem": _problem_dict(spec, x0),
                       "termination": trace.termination, "report": rep.to_dict()}))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="rrextrap", description="Reduced Rank Extrapolation experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run one mode and write run.csv + report.json"),
                           ("compare", "compare plain iteration and the three modes"),
                           ("diagnose", "write a diagnostics report")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--mode", choices=modes.MODES)
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-cycles", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", metavar="DIR")
    return ap


def _overrides(args):
    pairs = {("mode", "mode"): args.mode, ("mode", "n"): args.n, ("mode", "k"): args.k,
             ("mode", "tol"): args.tol, ("mode", "max_cycles"): args.max_cycles,
             ("problem", "seed"): args.seed, ("output", "dir"): args.out}
    return {key: v for key, v in pairs.items() if v is not None}


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "diagnose": cmd_diagnose}


def main(argv=None):
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnsupportedDiagnosticError as exc:
        print(f"unsupported diagnostic: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RREError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
