"""Nelson-Aalen and kernel-smoothed hazard rate estimators.

With ordered event times ``tau_(1) <= ... <= tau_(m)``, the i-th event is
weighted by ``1/(m - i + 1)``, the inverse of the number at risk just before
it.  The smoothed estimator replaces the jumps of the Nelson-Aalen step
function by kernel bumps::

    k_hat(t) = sum_i kappa_{t,b}(tau_(i)) / (m - i + 1)

Tied times receive consecutive ranks, as if they occurred in succession.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_event_times, check_points
from .exceptions import DomainError
from .kernels import AssociatedKernel, _check_bandwidth, _check_point, get_kernel, weighted_kernel_sum

__all__ = [
    "EventSample",
    "EstimateCurve",
    "nelson_aalen",
    "hazard_estimate",
    "empirical_survival_strict",
    "hazard_estimate_reweighted",
    "intermediate_estimate",
    "ratio_estimate",
]


@dataclass(frozen=True, eq=False)
class EventSample:
    """Sorted, validated event times.

    Build with :meth:`from_times`; the constructor assumes the array is
    already sorted and positive.
    """

    times: np.ndarray

    @classmethod
    def from_times(cls, times) -> "EventSample":
        if isinstance(times, EventSample):
            return times
        arr = check_event_times(times)
        arr.setflags(write=False)
        return cls(arr)

    @property
    def m(self) -> int:
        return int(self.times.size)

    @property
    def weights(self) -> np.ndarray:
        """Nelson-Aalen jump sizes ``1/(m - i + 1)`` in rank order."""
        m = self.m
        return 1.0 / (m - np.arange(m, dtype=float))

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"EventSample(m={self.m})"


@dataclass(frozen=True, eq=False)
class EstimateCurve:
    grid: np.ndarray
    values: np.ndarray
    bandwidths: np.ndarray
    kernel: AssociatedKernel
    method: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.grid) == len(self.values) == len(self.bandwidths)):
            raise DomainError("grid, values and bandwidths must have equal length")


def _as_sample(sample):
    return sample if isinstance(sample, EventSample) else EventSample.from_times(sample)


def _shape_like(values, t):
    return float(values[0]) if np.ndim(t) == 0 else values


def nelson_aalen(sample, t):
    """Nelson-Aalen cumulative hazard at ``t`` (scalar or array; ``inf`` allowed)."""
    sample = _as_sample(sample)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if t_arr.ndim > 1 or np.any(np.isnan(t_arr)):
        raise DomainError("t must be a scalar or 1-D array without NaN")
    cum = np.concatenate(([0.0], np.cumsum(sample.weights)))
    n = np.searchsorted(sample.times, t_arr, side="right")
    return _shape_like(cum[n], t)


def hazard_estimate(sample, kernel, b, t):
    """Kernel-smoothed Nelson-Aalen hazard estimate.

    ``b`` may be a scalar or one bandwidth per point of ``t``.
    """
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    t_arr = np.atleast_1d(check_points(t))
    _check_point(kernel, t_arr)
    b_arr = np.broadcast_to(np.asarray(b, dtype=float), t_arr.shape)
    values = weighted_kernel_sum(kernel, t_arr, b_arr, sample.times, sample.weights)
    return _shape_like(values, t)


def empirical_survival_strict(sample, x):
    """``1 - F_m(x)`` with ``F_m(x) = #{tau_i < x} / m`` (strict inequality)."""
    sample = _as_sample(sample)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    below = np.searchsorted(sample.times, x_arr, side="left")
    return _shape_like(1.0 - below / sample.m, x)


def _rank_survival(sample):
    """``1 - F_m(tau_(i))`` at every sample point, ranks used for ties."""
    m = sample.m
    below = np.searchsorted(sample.times, sample.times, side="left")
    rank = np.arange(m)
    strict = 1.0 - below / m
    ranked = (m - rank) / m
    return np.where(below == rank, strict, ranked)


def hazard_estimate_reweighted(sample, kernel, b, t):
    """Estimator written as ``(1/m) sum kappa(tau_i) / (1 - F_m(tau_i))``.

    Identical to :func:`hazard_estimate` up to rounding; useful as an
    independent evaluation route.
    """
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    t_arr = np.atleast_1d(check_points(t))
    _check_point(kernel, t_arr)
    weights = 1.0 / (sample.m * _rank_survival(sample))
    b_arr = np.broadcast_to(np.asarray(b, dtype=float), t_arr.shape)
    values = weighted_kernel_sum(kernel, t_arr, b_arr, sample.times, weights)
    return _shape_like(values, t)


def intermediate_estimate(sample, truth, kernel, b, t):
    """Oracle-weighted estimator ``(1/m) sum kappa(tau_i) / (1 - F(tau_i))``.

    Uses the true survival function of ``truth`` (a hazard model), so it is
    only available in simulations.
    """
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    t_arr = np.atleast_1d(check_points(t))
    _check_point(kernel, t_arr)
    cum = np.asarray(truth.cumulative_hazard(sample.times), dtype=float)
    if not np.all(np.isfinite(cum)):
        raise DomainError("true survival function vanishes at an observed time")
    weights = np.exp(cum) / sample.m
    if not np.all(np.isfinite(weights)):
        raise DomainError("true survival function vanishes at an observed time")
    b_arr = np.broadcast_to(np.asarray(b, dtype=float), t_arr.shape)
    values = weighted_kernel_sum(kernel, t_arr, b_arr, sample.times, weights)
    return _shape_like(values, t)


def ratio_estimate(sample, kernel, b, t):
    """Kernel density estimate divided by the empirical survival function.

    The survival denominator is floored at ``1/m``.
    """
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    t_arr = np.atleast_1d(check_points(t))
    _check_point(kernel, t_arr)
    m = sample.m
    b_arr = np.broadcast_to(np.asarray(b, dtype=float), t_arr.shape)
    dens = weighted_kernel_sum(kernel, t_arr, b_arr, sample.times, np.full(m, 1.0 / m))
    surv = np.maximum(np.atleast_1d(empirical_survival_strict(sample, t_arr)), 1.0 / m)
    return _shape_like(dens / surv, t)
