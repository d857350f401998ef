import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from hazardkernel.estimators import (
    EstimateCurve,
    EventSample,
    empirical_survival_strict,
    hazard_estimate,
    hazard_estimate_reweighted,
    intermediate_estimate,
    nelson_aalen,
    ratio_estimate,
)
from hazardkernel.exceptions import DataError, DomainError
from hazardkernel.kernels import density, get_kernel
from hazardkernel.models import ConstantHazard

times_strategy = arrays(
    np.float64, st.integers(1, 40), elements=st.floats(0.01, 100, allow_nan=False), unique=True
)


def test_event_sample_sorts_and_validates():
    s = EventSample.from_times([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(s.times, [1, 2, 3])
    assert s.m == 3 and len(s) == 3
    np.testing.assert_allclose(s.weights, [1 / 3, 1 / 2, 1])
    with pytest.raises(DataError):
        EventSample.from_times([1.0, -2.0])
    with pytest.raises(DataError):
        EventSample.from_times([])
    with pytest.raises(DataError):
        EventSample.from_times([1.0, np.nan])
    assert EventSample.from_times(np.array([[2.0], [1.0]])).m == 2


def test_event_sample_is_read_only():
    s = EventSample.from_times([1.0, 2.0])
    with pytest.raises(ValueError):
        s.times[0] = 5.0


# --------------------------------------------------------------------------
# Nelson-Aalen


@pytest.mark.parametrize("t, expected", [(2.5, 1 / 3 + 1 / 2), (0.5, 0.0), (10, 1 / 3 + 1 / 2 + 1)])
def test_nelson_aalen_examples(t, expected):
    assert nelson_aalen([1, 2, 3], t) == pytest.approx(expected, rel=1e-15)


def test_nelson_aalen_ties_take_consecutive_ranks():
    assert nelson_aalen([1, 1, 2], 1.0) == pytest.approx(1 / 3 + 1 / 2)


@given(times_strategy)
def test_nelson_aalen_monotone_and_terminal(times):
    s = EventSample.from_times(times)
    grid = np.linspace(0, times.max() * 1.1, 200)
    na = nelson_aalen(s, grid)
    assert np.all(np.diff(na) >= 0)
    assert nelson_aalen(s, np.inf) == pytest.approx(sum(1 / i for i in range(1, s.m + 1)), rel=1e-13)


# --------------------------------------------------------------------------
# smoothed estimator


def test_hazard_estimate_small_samples():
    for kernel, b in (("gamma", 0.3), ("gaussian", 0.7), ("lognormal", 0.2)):
        assert hazard_estimate([1.0], kernel, b, 0.8) == pytest.approx(density(kernel, 0.8, b, 1.0))
        expected = density(kernel, 0.8, b, 1.0) / 2 + density(kernel, 0.8, b, 2.0)
        assert hazard_estimate([2.0, 1.0], kernel, b, 0.8) == pytest.approx(expected, rel=1e-14)


def test_hazard_estimate_shapes():
    s = EventSample.from_times([1.0, 2.0, 5.0])
    assert isinstance(hazard_estimate(s, "gamma", 0.5, 1.0), float)
    assert hazard_estimate(s, "gamma", 0.5, [0.0, 1.0]).shape == (2,)
    per_point = hazard_estimate(s, "gamma", [0.2, 0.5], [1.0, 1.0])
    assert per_point[0] != per_point[1]
    with pytest.raises(DomainError):
        hazard_estimate(s, "gamma", 0.0, 1.0)
    with pytest.raises(DomainError):
        hazard_estimate(s, "gamma", 0.5, -1.0)


def test_hazard_estimate_nonnegative_curve(scenario_hazard):
    from hazardkernel.simulate import sample_event_times

    s = sample_event_times(scenario_hazard, 500, 3)
    vals = hazard_estimate(s, "gamma", 0.57, np.linspace(0, 600, 512))
    assert np.all(vals >= 0)


@given(times_strategy, st.floats(0.01, 1), st.floats(0, 120))
def test_reweighted_equals_direct(times, b, t):
    direct = hazard_estimate(times, "gamma", b, t)
    rew = hazard_estimate_reweighted(times, "gamma", b, t)
    assert rew == pytest.approx(direct, rel=1e-12, abs=1e-300)


def test_reweighted_random_points(rng):
    times = rng.exponential(2.0, 3)
    t = rng.uniform(0, 5, 100)
    diff = hazard_estimate(times, "gamma", 0.2, t) - hazard_estimate_reweighted(times, "gamma", 0.2, t)
    assert np.max(np.abs(diff)) <= 1e-12


def test_reweighted_with_ties_follows_ranks():
    times = [1.0, 1.0, 2.0]
    t = np.linspace(0.1, 3, 7)
    np.testing.assert_allclose(hazard_estimate_reweighted(times, "gamma", 0.3, t),
                               hazard_estimate(times, "gamma", 0.3, t), rtol=1e-13)


@given(times_strategy, st.floats(0.05, 1), st.floats(0, 120))
def test_linear_in_kernel(times, b, t):
    # 0.5 kappa_A + 0.5 kappa_B built by hand from the estimator's own weights
    s = EventSample.from_times(times)
    mix = np.sum(s.weights * (0.5 * density("gamma", t, b, s.times) + 0.5 * density("gaussian", t, b, s.times)))
    avg = 0.5 * hazard_estimate(s, "gamma", b, t) + 0.5 * hazard_estimate(s, "gaussian", b, t)
    # terms beyond the 1e-16 kernel-mass window are dropped; scale by the kernel height
    assert avg == pytest.approx(mix, rel=1e-12, abs=1e-12 / b)


def test_gaussian_mass_identity(rng):
    s = EventSample.from_times(rng.exponential(3.0, 25))
    b = 0.4
    lo, hi = s.times[0] - 12 * b, s.times[-1] + 12 * b
    pts = np.concatenate([s.times, [lo, hi]])
    total, _ = integrate.quad(lambda t: hazard_estimate(s, "gaussian", b, t), lo, hi,
                              points=np.sort(pts)[1:-1], limit=500)
    assert total == pytest.approx(nelson_aalen(s, np.inf), abs=1e-6)


@given(times_strategy, st.floats(0.05, 1), st.floats(0, 120), st.floats(0.1, 20))
def test_scale_equivariance(times, b, t, c):
    lhs = hazard_estimate(c * times, "gamma", c * b, c * t)
    rhs = hazard_estimate(times, "gamma", b, t) / c
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


# --------------------------------------------------------------------------
# survival, intermediate and ratio estimators


@pytest.mark.parametrize("x, expected", [(1, 1.0), (1.5, 0.5), (3, 0.0)])
def test_empirical_survival_strict(x, expected):
    assert empirical_survival_strict([1.0, 2.0], x) == expected


def test_intermediate_estimate_constant_truth():
    a, tau = 0.3, 2.0
    got = intermediate_estimate([tau], ConstantHazard(a), "gamma", 0.5, 1.5)
    assert got == pytest.approx(density("gamma", 1.5, 0.5, tau) * math.exp(a * tau), rel=1e-13)


def test_ratio_estimate_small_sample():
    assert ratio_estimate([1.0], "gamma", 0.3, 0.5) == pytest.approx(density("gamma", 0.5, 0.3, 1.0))
    # survival floor 1/m past the last observation
    val = ratio_estimate([1.0, 2.0], "gamma", 0.3, 5.0)
    dens = 0.5 * (density("gamma", 5.0, 0.3, 1.0) + density("gamma", 5.0, 0.3, 2.0))
    assert val == pytest.approx(dens / 0.5)


def test_ratio_estimate_constant_hazard_interior(rng):
    a = 0.5
    times = rng.exponential(1 / a, 20000)
    got = ratio_estimate(times, "lognormal", 0.01, np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(got, a, rtol=0.1)


def test_estimate_curve_length_contract():
    k = get_kernel("gamma")
    with pytest.raises(DomainError):
        EstimateCurve(np.zeros(3), np.zeros(2), np.zeros(3), k, "fixed")
