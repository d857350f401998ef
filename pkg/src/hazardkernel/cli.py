"""Command-line front end.

Commands::

    hazardkernel estimate        smoothed hazard curve from a CSV of event times
    hazardkernel select          bandwidth selection trace
    hazardkernel simulate        draw event times from a parametric hazard
    hazardkernel verify-kernel   kernel assumption conformance report
    hazardkernel reproduce-table Monte-Carlo MISE / MSE-at-0 tables

Every CSV written gets a ``.json`` sidecar with the settings needed to
re-run it.  Files are written atomically.  Exit codes: 0 on success, 2 for
data or argument errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bandwidth import PenaltyConfig, select_cv, select_global, select_local
from .estimators import EventSample
from .exceptions import DataError, DomainError, HazardKernelError, NumericalError
from .hazard import default_estimation_grid, estimate_curve, parse_method
from .kernels import get_kernel
from .models import hazard_from_dict, table_scenario_hazard
from .simulate import load_scenario, run_table, sample_event_times
from .verify import AssumptionProbe, check_assumptions

__all__ = ["main", "ingest_csv", "parse_grid", "atomic_write"]

EXIT_OK, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3
QUICK_REPS = 10


def ingest_csv(path) -> EventSample:
    """Read one positive event time per line.

    The first line may be a header; it is skipped when it does not parse as
    a number.  Blank lines are ignored.  Extra columns are not allowed.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    values = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError:
            if lineno == 1:
                continue
            raise DataError(f"cannot parse {text!r} as a number", line=lineno) from None
        if not math.isfinite(value) or value <= 0:
            raise DataError(f"event times must be positive and finite, got {text}", line=lineno)
        values.append(value)
    if not values:
        raise DataError(f"{path} holds no event times")
    return EventSample.from_times(values)


def parse_grid(text):
    """``"start:end:count"`` to an equispaced array."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise DomainError(f"grid must look like start:end:count, got {text!r}")
    try:
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DomainError(f"grid must look like start:end:count, got {text!r}") from None
    if count < 2 or not end > start:
        raise DomainError(f"grid needs end > start and count >= 2, got {text!r}")
    return np.linspace(start, end, count)


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_outputs(path, csv_text, sidecar):
    sidecar = {"tool": "hazardkernel", "version": __version__, **sidecar}
    meta = json.dumps(sidecar, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(csv_text)
        return
    atomic_write(os.fspath(path) + ".json", meta)
    atomic_write(path, csv_text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _fmt(x):
    return format(float(x), ".17g")


def _rows_to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _penalty(args):
    kwargs = {k: getattr(args, k) for k in ("kappa0", "kappa1", "epsilon", "k_sup")
              if getattr(args, k, None) is not None}
    return PenaltyConfig(**kwargs)


def _method_string(args):
    if args.bandwidth is not None:
        return f"{args.kernel}:fixed:{args.bandwidth!r}"
    method = args.method
    if method == "knn" and args.neighbors is not None:
        return f"{args.kernel}:knn:{args.neighbors}"
    if method in ("fixed", "ratio"):
        raise DomainError(f"method {method!r} needs --bandwidth")
    return f"{args.kernel}:{method}"


def _grid_for(args, sample, kernel):
    if args.grid is not None:
        return parse_grid(args.grid)
    return default_estimation_grid(sample, kernel)


# --------------------------------------------------------------------------
# commands


def cmd_estimate(args):
    sample = ingest_csv(args.input)
    if args.bandwidth is not None and args.method == "ratio":
        method = f"{args.kernel}:ratio:{args.bandwidth!r}"
    else:
        method = _method_string(args)
    spec = parse_method(method)
    grid = _grid_for(args, sample, spec.kernel)
    cfg = _penalty(args)
    curve = estimate_curve(sample, spec, grid, cfg=cfg)
    rows = [(_fmt(t), _fmt(k), _fmt(b)) for t, k, b in zip(curve.grid, curve.values, curve.bandwidths)]
    sidecar = {
        "command": "estimate",
        "input": os.path.abspath(args.input),
        "m": sample.m,
        "kernel": spec.kernel,
        "method": str(spec),
        "grid": {"start": float(grid[0]), "end": float(grid[-1]), "count": int(grid.size)},
        "penalty": {"kappa0": cfg.kappa0, "kappa1": cfg.kappa1, "epsilon": cfg.epsilon,
                    "k_sup": cfg.k_sup, "gamma_exponent": cfg.gamma_exponent},
        "seed": args.seed,
    }
    trace = curve.extra.get("trace")
    if trace is not None and np.ndim(trace.chosen) == 0:
        sidecar["selected_bandwidth"] = float(trace.chosen)
    _write_outputs(args.output, _rows_to_csv(("t", "k_hat", "bandwidth"), rows), sidecar)
    print(f"estimate: m={sample.m}, {grid.size} points, method {spec}", file=sys.stderr)
    return EXIT_OK


def cmd_select(args):
    sample = ingest_csv(args.input)
    kernel = get_kernel(args.kernel)
    grid = _grid_for(args, sample, kernel)
    cfg = _penalty(args)
    if args.method == "gl-global":
        chosen, trace = select_global(sample, kernel, None, cfg, grid)
    elif args.method == "cv":
        chosen, trace = select_cv(sample, kernel, None, grid)
    elif args.method == "gl-local":
        if args.at is None:
            raise DomainError("gl-local selection needs --at")
        chosen, trace = select_local(sample, kernel, None, cfg, float(args.at), pilot_points=grid)
    else:
        raise DomainError(f"unknown selection method {args.method!r}")
    header = ("bandwidth", "a_term", "v_term", "criterion")
    cols = [np.atleast_1d(np.asarray(getattr(trace, f), dtype=float)).ravel()
            for f in ("bandwidths", "a_term", "v_term", "criterion")]
    rows = [tuple(_fmt(c[i]) for c in cols) for i in range(cols[0].size)]
    sidecar = {
        "command": "select",
        "input": os.path.abspath(args.input),
        "m": sample.m,
        "kernel": kernel.name,
        "method": args.method,
        "selected_bandwidth": float(chosen),
        "at": args.at,
        "grid": {"start": float(grid[0]), "end": float(grid[-1]), "count": int(grid.size)},
        "penalty": {"kappa0": cfg.kappa0, "kappa1": cfg.kappa1, "epsilon": cfg.epsilon,
                    "k_sup": trace.extra.get("k_sup", cfg.k_sup)},
    }
    _write_outputs(args.output, _rows_to_csv(header, rows), sidecar)
    print(f"selected bandwidth {float(chosen):.6g}", file=sys.stderr)
    return EXIT_OK


def _load_hazard(text):
    if text is None:
        return table_scenario_hazard()
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return hazard_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise DataError(f"hazard spec is not valid JSON: {exc}") from exc


def cmd_simulate(args):
    model = _load_hazard(args.hazard)
    sample = sample_event_times(model, args.m, args.seed, rep=args.rep)
    text = _rows_to_csv(("time",), [(_fmt(x),) for x in sample.times])
    sidecar = {"command": "simulate", "hazard": model.to_dict(), "m": args.m,
               "seed": args.seed, "rep": args.rep, "rng": "Philox(SeedSequence(seed, (m, rep)))"}
    _write_outputs(args.output, text, sidecar)
    return EXIT_OK


def cmd_verify_kernel(args):
    probe = AssumptionProbe()
    if args.t_grid is not None:
        probe = AssumptionProbe(t_grid=tuple(float(v) for v in args.t_grid.split(",")))
    report = check_assumptions(args.kernel, probe, gamma=args.gamma, eta=args.eta,
                               tolerance=args.tolerance)
    print(report.table())
    if args.output is not None:
        atomic_write(args.output, report.to_json(indent=2) + "\n")
    if args.strict and not report.all_passed:
        return 1
    return EXIT_OK


def cmd_reproduce_table(args):
    scenario = load_scenario(args.scenario)
    reps = args.reps if args.reps is not None else (QUICK_REPS if args.quick else None)
    m_list = [int(v) for v in args.m.split(",")] if args.m else None
    methods = args.methods.split(",") if args.methods else None
    report = run_table(scenario, methods=methods, m_list=m_list, reps=reps,
                       master_seed=args.seed, n_jobs=args.jobs)
    sidecar = {"command": "reproduce-table", **report.to_dict()}
    sidecar.pop("records")
    sidecar.pop("wall_time")
    _write_outputs(args.output, report.to_csv(), sidecar)
    print(f"reproduce-table: {len(report.records)} rows, {report.wall_time:.1f} s", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_penalty_flags(p):
    p.add_argument("--kappa0", type=float, help="GL penalty constant of V0")
    p.add_argument("--kappa1", type=float, help="GL penalty constant of V")
    p.add_argument("--epsilon", type=float, help="GL penalty epsilon")
    p.add_argument("--k-sup", dest="k_sup", type=float, help="sup of the hazard (default: pilot estimate)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hazardkernel",
                                     description="Associated-kernel hazard rate estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate a hazard curve from event times")
    p.add_argument("--input", "-i", required=True, help="CSV with one event time per line")
    p.add_argument("--output", "-o", help="output CSV (stdout if omitted)")
    p.add_argument("--kernel", default="gamma", choices=("gamma", "gaussian", "lognormal"))
    p.add_argument("--method", default="gl-global",
                   choices=("gl-global", "gl-local", "cv", "knn", "fixed", "ratio"))
    p.add_argument("--bandwidth", type=float, help="fixed bandwidth (implies --method fixed)")
    p.add_argument("--neighbors", type=int, help="neighbour count for --method knn")
    p.add_argument("--grid", help="estimation grid start:end:count")
    p.add_argument("--seed", type=int, default=None, help="recorded in the sidecar")
    _add_penalty_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select", help="print a bandwidth selection trace")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--output", "-o")
    p.add_argument("--kernel", default="gamma", choices=("gamma", "gaussian", "lognormal"))
    p.add_argument("--method", default="gl-global", choices=("gl-global", "gl-local", "cv"))
    p.add_argument("--at", type=float, help="point for gl-local selection")
    p.add_argument("--grid", help="estimation grid start:end:count")
    _add_penalty_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="draw event times from a parametric hazard")
    p.add_argument("--hazard", help='JSON {"family": ..., "params": {...}} or a path to one '
                                    "(default: the a + c exp(-dt) table scenario)")
    p.add_argument("-m", type=int, required=True, help="sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rep", type=int, default=0, help="replication index of the stream")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-kernel", help="check the kernel assumptions numerically")
    p.add_argument("--kernel", default="gamma", choices=("gamma", "gaussian", "lognormal"))
    p.add_argument("--gamma", type=float, default=0.5, help="variance exponent")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--tolerance", type=float, default=0.25)
    p.add_argument("--t-grid", dest="t_grid", help="comma-separated probe points")
    p.add_argument("--output", "-o", help="JSON report")
    p.add_argument("--strict", action="store_true", help="exit 1 when a check fails")
    p.set_defaults(func=cmd_verify_kernel)

    p = sub.add_parser("reproduce-table", help="Monte-Carlo MISE and MSE at 0")
    p.add_argument("--scenario", default="table2", help="table1, table2 or a scenario JSON file")
    p.add_argument("--output", "-o")
    p.add_argument("--quick", action="store_true", help=f"{QUICK_REPS} replications")
    p.add_argument("--reps", type=int)
    p.add_argument("--m", help="comma-separated sample sizes")
    p.add_argument("--methods", help="comma-separated method strings")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes (default: $HAZARDKERNEL_JOBS or 1)")
    p.set_defaults(func=cmd_reproduce_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"hazardkernel: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HazardKernelError, OSError) as exc:
        print(f"hazardkernel: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
