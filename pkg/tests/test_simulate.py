import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hazardkernel.estimators import EstimateCurve
from hazardkernel.exceptions import DomainError
from hazardkernel.kernels import get_kernel
from hazardkernel.models import ConstantHazard, table_scenario_hazard
from hazardkernel.simulate import (
    LOGNORMAL_ORIGIN,
    McRecord,
    Scenario,
    builtin_scenario,
    default_jobs,
    load_scenario,
    mise,
    normality_experiment,
    rate_regression,
    replication_rng,
    run_table,
    sample_event_times,
    squared_error_at,
)

GAMMA = get_kernel("gamma")


def curve_of(grid, values):
    grid = np.asarray(grid, dtype=float)
    return EstimateCurve(grid, np.asarray(values, dtype=float), np.ones_like(grid), GAMMA, "fixed")


def test_mise_examples():
    model = ConstantHazard(0.3)
    grid = np.linspace(0, 1, 11)
    assert mise(curve_of(grid, np.full(11, 0.3)), model) == 0.0
    assert mise(curve_of(grid, np.full(11, 1.3)), model) == pytest.approx(1.0, rel=1e-14)
    assert mise(curve_of(grid, np.full(11, 1.3)), model, (0.25, 0.55)) == pytest.approx(0.3, rel=1e-13)


@given(st.integers(1, 39))
def test_mise_is_additive_over_intervals(k):
    # exact when the cut is a grid node; off-node cuts add a trapezoid point
    model = table_scenario_hazard()
    grid = np.linspace(0, 1, 41)
    cut = grid[k]
    curve = curve_of(grid, np.sin(7 * grid) ** 2)
    whole = mise(curve, model, (0, 1))
    parts = mise(curve, model, (0, cut)) + mise(curve, model, (cut, 1))
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-15)


def test_mise_requires_coverage():
    with pytest.raises(DomainError):
        mise(curve_of(np.linspace(0, 1, 5), np.zeros(5)), ConstantHazard(1.0), (0, 2))
    with pytest.raises(DomainError):
        mise(curve_of(np.linspace(0, 1, 5), np.zeros(5)), ConstantHazard(1.0), (0.5, 0.5))


def test_squared_error_at():
    c = curve_of([0.0, 1.0], [0.5, 0.0])
    assert squared_error_at(c, ConstantHazard(0.2)) == pytest.approx(0.09)
    assert squared_error_at(c, ConstantHazard(0.2), index=1) == pytest.approx(0.04)


def test_replication_streams_are_independent_of_order():
    a = replication_rng(7, 500, 3).random(4)
    replication_rng(7, 500, 2).random(4)
    np.testing.assert_array_equal(a, replication_rng(7, 500, 3).random(4))
    assert not np.array_equal(a, replication_rng(7, 1000, 3).random(4))
    assert not np.array_equal(a, replication_rng(8, 500, 3).random(4))


def test_default_jobs(monkeypatch):
    monkeypatch.delenv("HAZARDKERNEL_JOBS", raising=False)
    assert default_jobs() == 1
    monkeypatch.setenv("HAZARDKERNEL_JOBS", "3")
    assert default_jobs() == 3


def test_builtin_scenarios():
    t1 = builtin_scenario("table1")
    assert "gamma:gl-global" in t1.methods and "gaussian:cv" in t1.methods
    t2 = load_scenario("TABLE2")
    assert t2.m_list == (500, 1000, 2000, 4000) and t2.reps == 50
    assert t2.grid.size == 512 and t2.grid[-1] == 600.0
    with pytest.raises(DomainError):
        builtin_scenario("table3")


def test_load_scenario_forms(tmp_path):
    doc = {"hazard": {"family": "constant", "params": {"a": 0.1}}, "kernel": "gamma",
           "method": "gl-global", "m_list": [50, 100], "reps": 3, "interval": [0, 30], "seed": 4}
    s = load_scenario(doc)
    assert s.methods == ("gamma:gl-global",) and s.interval == (0.0, 30.0)
    p = tmp_path / "sc.json"
    p.write_text(json.dumps(doc))
    assert load_scenario(str(p)) == load_scenario(json.dumps(doc))
    assert load_scenario(s.to_dict()).to_dict() == s.to_dict()


@pytest.mark.parametrize("doc", [
    "{not json",
    "[1, 2]",
    {"methods": []},
    {"methods": ["gamma:magic"]},
    {"methods": ["gamma:gl-global"], "m_list": [4]},
    {"methods": ["gamma:gl-global"], "reps": 1},
    {"methods": ["gamma:gl-global"], "interval": [5, 1]},
    {"methods": ["gamma:gl-global"], "m_list": "many"},
    {"hazard": {"family": "weibull"}, "methods": ["gamma:gl-global"]},
    {"m_list": [100]},
])
def test_load_scenario_rejects(doc):
    with pytest.raises(DomainError):
        load_scenario(doc)


@pytest.fixture(scope="module")
def small_scenario():
    return Scenario("small", ConstantHazard(0.05), ("gamma:fixed:0.5", "lognormal:ratio:0.5"),
                    (60, 120), reps=2, interval=(0.0, 40.0), seed=3, grid_points=64)


def test_run_table_small(small_scenario):
    report = run_table(small_scenario, n_jobs=1)
    assert len(report.records) == 4
    rec = report.record(60, "gamma:fixed:0.5")
    assert isinstance(rec, McRecord) and rec.reps == 2 and rec.bandwidth_mean == 0.5
    raw = report.raw[(60, "gamma:fixed:0.5")]["mise"]
    assert rec.mise_mean == pytest.approx(raw.mean()) and rec.mise_sd == pytest.approx(raw.std(ddof=1))
    lines = report.to_csv().splitlines()
    assert lines[0].split(",") == list(McRecord.FIELDS) and len(lines) == 5
    assert json.dumps(report.to_dict())
    with pytest.raises(KeyError):
        report.record(999, "gamma:fixed:0.5")


def test_run_table_reproduces_by_hand(small_scenario):
    from hazardkernel.hazard import estimate_curve

    report = run_table(small_scenario, n_jobs=1)
    sample = sample_event_times(small_scenario.hazard, 120, replication_rng(3, 120, 1))
    curve = estimate_curve(sample, "gamma:fixed:0.5", small_scenario.grid)
    assert report.raw[(120, "gamma:fixed:0.5")]["mise"][1] == mise(curve, small_scenario.hazard)
    # lognormal is evaluated at a shifted origin and scored as the origin
    x = np.maximum(small_scenario.grid, LOGNORMAL_ORIGIN)
    ln = estimate_curve(sample, "lognormal:ratio:0.5", x)
    want = (ln.values[0] - 0.05) ** 2
    assert report.raw[(120, "lognormal:ratio:0.5")]["mse0"][1] == pytest.approx(want, rel=1e-15)


def test_run_table_independent_of_jobs(small_scenario):
    a = run_table(small_scenario, n_jobs=1)
    b = run_table(small_scenario, n_jobs=2)
    assert a.to_csv() == b.to_csv()


def test_run_table_overrides(small_scenario):
    r = run_table(small_scenario, methods=["gamma:fixed:0.25"], m_list=[30], reps=3, master_seed=9)
    assert [(x.m, x.method, x.reps) for x in r.records] == [(30, "gamma:fixed:0.25", 3)]
    assert r.master_seed == 9


def test_rate_regression_constant_truth():
    # constant truth: only the variance term, so the error falls with m
    res = rate_regression(ConstantHazard(0.05), "gamma", [200, 400, 800], b_rule=1.0, reps=4,
                          interval=(5.0, 30.0), grid_points=64)
    assert res.slope < 0
    assert len(res.errors) == 3 and res.bandwidths[0] == pytest.approx(200 ** -0.4)
    with pytest.raises(DomainError):
        rate_regression(ConstantHazard(0.05), "gamma", [200, 200, 400])


def test_rate_regression_pointwise():
    res = rate_regression(ConstantHazard(0.05), "gamma", [200, 400, 800], reps=3, at=10.0)
    assert np.all(np.asarray(res.errors) >= 0)


def test_normality_experiment_small():
    res = normality_experiment(ConstantHazard(0.5), "gamma", 1.0, 200, reps=30, seed=1)
    assert res.standardized.shape == (30,)
    assert 0 <= res.ks_statistic <= 1 and 0 <= res.p_value <= 1
    with pytest.raises(DomainError):
        normality_experiment(ConstantHazard(0.5), "gamma", 1.0, 200, reps=1)
