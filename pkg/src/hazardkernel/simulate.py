"""Monte-Carlo harness: exact samplers, error measures and experiment runners.

Random streams are counter based.  Replication ``rep`` of sample size ``m``
under master seed ``s`` draws from a Philox generator keyed by
``SeedSequence(s, spawn_key=(m, rep))``, so every replication can be
recomputed in isolation and results do not depend on the parallel schedule.
All methods of a table see the same samples.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, stats

from ._validation import check_count
from .estimators import EstimateCurve, EventSample, hazard_estimate
from .exceptions import DomainError, HazardKernelError
from .hazard import estimate_curve, parse_method
from .kernels import get_kernel, power_integral
from .models import HazardModel, hazard_from_dict, table_scenario_hazard
from .verify import oracle_expectation

__all__ = [
    "replication_rng",
    "sample_event_times",
    "mise",
    "squared_error_at",
    "Scenario",
    "load_scenario",
    "builtin_scenario",
    "McRecord",
    "McReport",
    "run_table",
    "RateResult",
    "rate_regression",
    "NormalityResult",
    "normality_experiment",
    "default_jobs",
]

JOBS_ENV = "HAZARDKERNEL_JOBS"
# Lognormal kernels are undefined at t = 0; grid points there are moved here.
LOGNORMAL_ORIGIN = 1e-3


def default_jobs() -> int:
    """Worker count from ``HAZARDKERNEL_JOBS`` (default 1)."""
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None


def replication_rng(master_seed, m, rep) -> np.random.Generator:
    """Independent Philox stream for replication ``rep`` at sample size ``m``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(m), int(rep)))
    return np.random.Generator(np.random.Philox(seq))


def sample_event_times(model: HazardModel, m, seed=None, *, rep=0) -> EventSample:
    """Draw ``m`` event times by inverting the cumulative hazard.

    ``seed`` may be an integer master seed (the stream is then keyed by
    ``(m, rep)``) or a ``numpy.random.Generator``.
    """
    m = check_count(m, "m")
    rng = seed if isinstance(seed, np.random.Generator) else replication_rng(
        0 if seed is None else seed, m, rep)
    e = rng.standard_exponential(m)
    return EventSample.from_times(model.inverse_cumulative(e))


def _restrict(grid, values, interval):
    t1, t2 = map(float, interval)
    if not t2 > t1:
        raise DomainError(f"interval must be increasing, got {interval!r}")
    grid = np.asarray(grid, dtype=float)
    if grid[0] > t1 + 1e-12 * max(1.0, abs(t1)) or grid[-1] < t2 - 1e-12 * max(1.0, abs(t2)):
        raise DomainError(f"estimation grid [{grid[0]}, {grid[-1]}] does not cover {interval}")
    inside = (grid > t1) & (grid < t2)
    x = np.concatenate(([t1], grid[inside], [t2]))
    y = np.concatenate(([np.interp(t1, grid, values)], values[inside], [np.interp(t2, grid, values)]))
    return x, y


def mise(curve: EstimateCurve, model: HazardModel, interval=None) -> float:
    """Integrated squared error of one estimate, ``int_I (k_hat - k)^2``.

    Trapezoid rule on the curve's grid; interval endpoints falling between
    grid points are linearly interpolated.
    """
    grid = np.asarray(curve.grid, dtype=float)
    interval = (grid[0], grid[-1]) if interval is None else interval
    x, y = _restrict(grid, np.asarray(curve.values, dtype=float), interval)
    err = y - np.asarray(model.hazard(x), dtype=float)
    return float(integrate.trapezoid(err * err, x))


def squared_error_at(curve: EstimateCurve, model: HazardModel, index=0) -> float:
    """``(k_hat - k)^2`` at one grid point (the first one by default)."""
    t = float(curve.grid[index])
    return float((curve.values[index] - model.hazard(t)) ** 2)


# --------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class Scenario:
    name: str
    hazard: HazardModel
    methods: tuple
    m_list: tuple
    reps: int = 50
    interval: tuple = (0.0, 600.0)
    seed: int = 20240101
    grid_points: int = 512

    def __post_init__(self):
        if not self.methods:
            raise DomainError("scenario lists no methods")
        for meth in self.methods:
            parse_method(meth)
        if not self.m_list or any(int(m) < 8 for m in self.m_list):
            raise DomainError("scenario m_list must hold sample sizes >= 8")
        check_count(self.reps, "reps", minimum=2)
        t1, t2 = self.interval
        if not t2 > t1 or t1 < 0:
            raise DomainError(f"bad scenario interval {self.interval!r}")
        check_count(self.grid_points, "grid_points", minimum=2)

    @property
    def grid(self):
        return np.linspace(self.interval[0], self.interval[1], self.grid_points)

    def to_dict(self):
        return {
            "name": self.name,
            "hazard": self.hazard.to_dict(),
            "methods": list(self.methods),
            "m_list": list(self.m_list),
            "reps": self.reps,
            "interval": list(self.interval),
            "seed": self.seed,
            "grid_points": self.grid_points,
        }


_TABLE1 = ("gaussian:cv", "gaussian:knn", "lognormal:ratio:0.5", "gamma:gl-global")
_TABLE2 = ("gamma:gl-global", "gamma:cv", "gamma:gl-local", "gamma:knn")


def builtin_scenario(name) -> Scenario:
    """``"table1"`` (kernel comparison) or ``"table2"`` (bandwidth selectors)."""
    methods = {"table1": _TABLE1, "table2": _TABLE2}.get(str(name).lower())
    if methods is None:
        raise DomainError(f"unknown built-in scenario {name!r}; expected 'table1' or 'table2'")
    return Scenario(str(name).lower(), table_scenario_hazard(), methods, (500, 1000, 2000, 4000))


def load_scenario(source) -> Scenario:
    """Build a scenario from a mapping, a JSON string/path or a built-in name.

    Keys: ``hazard`` (``{family, params}``), ``methods`` (list of method
    strings) or ``kernel`` plus ``method``, ``m_list``, ``reps``,
    ``interval``, ``seed`` and optionally ``grid_points`` and ``name``.
    """
    if isinstance(source, Scenario):
        return source
    if isinstance(source, (str, os.PathLike)):
        text = os.fspath(source)
        if text.lower() in ("table1", "table2"):
            return builtin_scenario(text)
        if os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        try:
            source = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(source, dict):
        raise DomainError("scenario must be a JSON object")
    try:
        hazard = hazard_from_dict(source.get("hazard", table_scenario_hazard().to_dict()))
        if "methods" in source:
            methods = tuple(str(s) for s in source["methods"])
        elif "method" in source:
            method = str(source["method"])
            kernel = source.get("kernel")
            methods = (f"{kernel}:{method}" if kernel and ":" not in method.split(":")[0]
                       and method.split(":")[0] not in ("gamma", "gaussian", "lognormal")
                       else method,)
        else:
            raise DomainError("scenario needs 'methods' or 'method'")
        return Scenario(
            name=str(source.get("name", "custom")),
            hazard=hazard,
            methods=methods,
            m_list=tuple(int(m) for m in source.get("m_list", (500, 1000, 2000, 4000))),
            reps=int(source.get("reps", 50)),
            interval=tuple(float(v) for v in source.get("interval", (0.0, 600.0))),
            seed=int(source.get("seed", 20240101)),
            grid_points=int(source.get("grid_points", 512)),
        )
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, HazardKernelError):
            raise
        raise DomainError(f"malformed scenario: {exc}") from exc


# --------------------------------------------------------------------------
# table runs


@dataclass(frozen=True)
class McRecord:
    m: int
    method: str
    reps: int
    mise_mean: float
    mise_sd: float
    mse0_mean: float
    mse0_sd: float
    bandwidth_mean: float

    FIELDS = ("m", "method", "reps", "mise_mean", "mise_sd", "mse0_mean", "mse0_sd",
              "bandwidth_mean")


@dataclass
class McReport:
    scenario: Scenario
    master_seed: int
    replications: int
    records: list
    wall_time: float = 0.0
    raw: dict = field(default_factory=dict, repr=False)

    def record(self, m, method) -> McRecord:
        for r in self.records:
            if r.m == m and r.method == method:
                return r
        raise KeyError((m, method))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(McRecord.FIELDS)
        for r in self.records:
            writer.writerow([r.m, r.method, r.reps] + [format(getattr(r, f), ".17g")
                                                       for f in McRecord.FIELDS[3:]])
        return buf.getvalue()

    def to_dict(self):
        return {
            "scenario": self.scenario.to_dict(),
            "master_seed": self.master_seed,
            "replications": self.replications,
            "wall_time": self.wall_time,
            "records": [{f: getattr(r, f) for f in McRecord.FIELDS} for r in self.records],
        }


def _replicate(args):
    """One replication: a sample and every method evaluated on it."""
    scenario, m, rep = args
    sample = sample_event_times(scenario.hazard, m, replication_rng(scenario.seed, m, rep))
    grid = scenario.grid
    out = []
    for meth in scenario.methods:
        x = grid
        if parse_method(meth).kernel == "lognormal":
            x = np.maximum(grid, LOGNORMAL_ORIGIN)
        try:
            curve = estimate_curve(sample, meth, x)
        except HazardKernelError as exc:
            raise type(exc)(f"m={m} replication {rep} method {meth}: {exc}") from exc
        if x is not grid:
            # score the shifted evaluation as if it were taken at the origin
            curve = EstimateCurve(grid, curve.values, curve.bandwidths, curve.kernel,
                                  curve.method, curve.extra)
        out.append((mise(curve, scenario.hazard, scenario.interval),
                    squared_error_at(curve, scenario.hazard, 0),
                    float(np.mean(curve.bandwidths))))
    return out


def _map(func, tasks, n_jobs):
    if n_jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * n_jobs))))


def _sd(x):
    return float(np.std(x, ddof=1)) if len(x) > 1 else math.nan


def run_table(scenario, methods=None, m_list=None, reps=None, master_seed=None, *,
              n_jobs=None) -> McReport:
    """Replicate a scenario and summarize MISE and squared error at 0.

    Arguments other than ``scenario`` override the scenario's fields.  Work
    is spread over ``n_jobs`` processes (``HAZARDKERNEL_JOBS`` by default);
    results are reduced by replication index, so they do not depend on it.
    """
    sc = load_scenario(scenario)
    sc = Scenario(
        sc.name, sc.hazard,
        tuple(methods) if methods is not None else sc.methods,
        tuple(int(m) for m in m_list) if m_list is not None else sc.m_list,
        int(reps) if reps is not None else sc.reps,
        sc.interval,
        int(master_seed) if master_seed is not None else sc.seed,
        sc.grid_points,
    )
    n_jobs = default_jobs() if n_jobs is None else check_count(n_jobs, "n_jobs")
    start = time.perf_counter()
    tasks = [(sc, m, rep) for m in sc.m_list for rep in range(sc.reps)]
    results = _map(_replicate, tasks, n_jobs)
    records, raw = [], {}
    for i_m, m in enumerate(sc.m_list):
        block = np.asarray(results[i_m * sc.reps:(i_m + 1) * sc.reps], dtype=float)
        for j, meth in enumerate(sc.methods):
            mi, ms, bw = block[:, j, 0], block[:, j, 1], block[:, j, 2]
            raw[(m, meth)] = {"mise": mi, "mse0": ms, "bandwidth": bw}
            records.append(McRecord(m, str(parse_method(meth)), sc.reps, float(mi.mean()), _sd(mi),
                                    float(ms.mean()), _sd(ms), float(bw.mean())))
    return McReport(sc, sc.seed, sc.reps, records, time.perf_counter() - start, raw)


# --------------------------------------------------------------------------
# rates and normality


@dataclass(frozen=True)
class RateResult:
    slope: float
    intercept: float
    m_list: tuple
    errors: tuple
    bandwidths: tuple


def _bandwidth_rule(b_rule, exponent=-0.4) -> Callable:
    if callable(b_rule):
        return b_rule
    c = float(b_rule)
    if not c > 0:
        raise DomainError("bandwidth constant must be positive")
    return lambda m: c * m ** exponent


def _rate_task(args):
    model, kernel, m, b, rep, seed, grid, interval, at = args
    sample = sample_event_times(model, m, replication_rng(seed, m, rep))
    if at is not None:
        est = hazard_estimate(sample, kernel, b, at)
        return (est - model.hazard(at)) ** 2
    vals = hazard_estimate(sample, kernel, b, grid)
    curve = EstimateCurve(grid, vals, np.full(grid.shape, b), get_kernel(kernel), "fixed")
    return mise(curve, model, interval)


def rate_regression(model, kernel, m_list, b_rule=1.0, reps=20, seed=0, *, interval=(0.0, 600.0),
                    grid_points=512, at=None, exponent=-0.4, n_jobs=None) -> RateResult:
    """Least-squares slope of ``log(mean error)`` against ``log(m)``.

    Parameters
    ----------
    b_rule : float or callable
        ``b_m = b_rule * m**exponent`` for a number, or ``b_rule(m)``.
    at : float, optional
        Use the squared error at this single point instead of the MISE.
    """
    model = hazard_from_dict(model)
    kernel = get_kernel(kernel)
    m_list = tuple(int(m) for m in m_list)
    if len(set(m_list)) < 3:
        raise DomainError("rate regression needs at least 3 distinct sample sizes")
    reps = check_count(reps, "reps")
    rule = _bandwidth_rule(b_rule, exponent)
    grid = np.linspace(interval[0], interval[1], grid_points)
    n_jobs = default_jobs() if n_jobs is None else n_jobs
    tasks = [(model, kernel, m, float(rule(m)), rep, seed, grid, interval, at)
             for m in m_list for rep in range(reps)]
    vals = np.asarray(_map(_rate_task, tasks, n_jobs), dtype=float).reshape(len(m_list), reps)
    errors = vals.mean(axis=1)
    slope, intercept = np.polyfit(np.log(m_list), np.log(errors), 1)
    return RateResult(float(slope), float(intercept), m_list, tuple(errors.tolist()),
                      tuple(float(rule(m)) for m in m_list))


@dataclass(frozen=True)
class NormalityResult:
    ks_statistic: float
    p_value: float
    mean: float
    sd: float
    standardized: np.ndarray = field(repr=False)


def _normality_task(args):
    model, kernel, t, m, b, rep, seed = args
    sample = sample_event_times(model, m, replication_rng(seed, m, rep))
    return hazard_estimate(sample, kernel, b, t)


def normality_experiment(model, kernel, t, m, b_rule=1.0, reps=1000, seed=0, *, exponent=-0.4,
                         n_jobs=None) -> NormalityResult:
    """KS distance between standardized estimates and ``N(0, 1)``.

    Each replicate is centred by the exact mean and scaled by the asymptotic
    standard deviation ``sqrt(alpha_b(t) k(t) / ((1 - F(t)) m))``; at ``t = 0``
    the Gamma kernel has ``alpha_b(0) = 1/(2b)``.
    """
    model = hazard_from_dict(model)
    kernel = get_kernel(kernel)
    m = check_count(m, "m")
    reps = check_count(reps, "reps", minimum=1)
    if reps < 2:
        raise DomainError("normality experiment needs at least 2 replications")
    b = float(_bandwidth_rule(b_rule, exponent)(m))
    mean = oracle_expectation(model, kernel, b, t, m)
    var = power_integral(kernel, t, b, 2) * model.hazard(t) / model.survival(t) / m
    n_jobs = default_jobs() if n_jobs is None else n_jobs
    tasks = [(model, kernel, float(t), m, b, rep, seed) for rep in range(reps)]
    est = np.asarray(_map(_normality_task, tasks, n_jobs), dtype=float)
    z = (est - mean) / math.sqrt(var)
    ks = stats.kstest(z, "norm")
    return NormalityResult(float(ks.statistic), float(ks.pvalue), float(z.mean()),
                           float(z.std(ddof=1)), z)
