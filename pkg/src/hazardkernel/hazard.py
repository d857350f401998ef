"""Estimator objects and the curve-building entry point.

:class:`KernelHazard` wraps the smoothed Nelson-Aalen estimator in the
scikit-learn estimator interface::

    >>> est = KernelHazard(kernel="gamma", bandwidth="gl-global").fit(times)
    >>> est.predict([0.0, 1.0, 10.0])

:func:`estimate_curve` evaluates an estimator described by a method string
such as ``"gamma:gl-global"`` or ``"gaussian:knn:60"`` on a grid.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .bandwidth import (
    KNN_FLOOR,
    PenaltyConfig,
    default_knn_neighbors,
    grid_global,
    grid_local,
    knn_bandwidth,
    pilot_sup,
    select_cv,
    select_global,
    select_local,
)
from .estimators import EstimateCurve, EventSample, _as_sample, hazard_estimate, nelson_aalen, ratio_estimate
from .exceptions import DomainError
from .kernels import get_kernel

__all__ = ["KernelHazard", "MethodSpec", "parse_method", "estimate_curve", "default_estimation_grid"]

SELECTORS = ("fixed", "gl-global", "gl-local", "cv", "knn", "ratio")


@dataclass(frozen=True)
class MethodSpec:
    """Parsed ``kernel:selector[:arg]`` method string."""

    kernel: str
    selector: str
    arg: Optional[float] = None

    def __str__(self):
        base = f"{self.kernel}:{self.selector}"
        if self.arg is None:
            return base
        arg = int(self.arg) if self.selector == "knn" else self.arg
        return f"{base}:{arg:g}" if isinstance(arg, float) else f"{base}:{arg}"


def parse_method(text) -> MethodSpec:
    """Parse ``"gamma:gl-global"``, ``"gaussian:knn:60"``, ``"gamma:fixed:0.57"`` ..."""
    if isinstance(text, MethodSpec):
        return text
    parts = str(text).strip().lower().split(":")
    if len(parts) not in (2, 3):
        raise DomainError(f"method must look like 'kernel:selector[:arg]', got {text!r}")
    kernel = get_kernel(parts[0]).name
    selector = parts[1]
    if selector not in SELECTORS:
        raise DomainError(f"unknown selector {selector!r}; expected one of {SELECTORS}")
    arg = None
    if len(parts) == 3:
        try:
            arg = float(parts[2])
        except ValueError:
            raise DomainError(f"bad method argument in {text!r}") from None
        if not arg > 0:
            raise DomainError(f"method argument must be positive in {text!r}")
        if selector == "knn" and arg != int(arg):
            raise DomainError("knn neighbour count must be an integer")
    if selector in ("fixed", "ratio") and arg is None:
        raise DomainError(f"selector {selector!r} needs a bandwidth, e.g. '{kernel}:{selector}:0.5'")
    return MethodSpec(kernel, selector, arg)


def default_estimation_grid(sample, kernel="gamma", n=512):
    """``n`` equispaced points from the support start to the 99% sample quantile."""
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    upper = float(np.quantile(sample.times, 0.99))
    lower = float(sample.times[0]) if kernel.name == "lognormal" else 0.0
    if upper <= lower:
        upper = float(sample.times[-1])
    if upper <= lower:
        upper = lower + 1.0
    return np.linspace(lower, upper, n)


def estimate_curve(sample, method, grid, *, cfg=None, bandwidth_grid=None) -> EstimateCurve:
    """Evaluate the estimator described by ``method`` on ``grid``.

    Parameters
    ----------
    sample : EventSample or array-like
    method : str or MethodSpec
        ``kernel:selector[:arg]`` with selector one of ``fixed`` (arg is the
        bandwidth), ``gl-global``, ``gl-local``, ``cv``, ``knn`` (optional
        arg is the neighbour count) and ``ratio`` (arg is the bandwidth).
    grid : array-like
        Increasing estimation points.
    cfg : PenaltyConfig, optional
        GL penalty constants.
    bandwidth_grid : array-like or BandwidthGrid, optional
        Candidate bandwidths; the selector's default grid otherwise.
    """
    sample = _as_sample(sample)
    spec = parse_method(method)
    kernel = get_kernel(spec.kernel)
    x = np.atleast_1d(check_points(grid))
    extra = {}
    if spec.selector in ("fixed", "ratio"):
        b = np.full(x.shape, spec.arg)
        if spec.selector == "ratio":
            values = ratio_estimate(sample, kernel, spec.arg, x)
        else:
            values = hazard_estimate(sample, kernel, spec.arg, x)
        return EstimateCurve(x, values, b, kernel, str(spec), extra)
    if spec.selector == "gl-global":
        chosen, trace = select_global(sample, kernel, bandwidth_grid, cfg, x)
        b = np.full(x.shape, chosen)
        extra["trace"] = trace
    elif spec.selector == "gl-local":
        b, trace = select_local(sample, kernel, bandwidth_grid, cfg, x)
        extra["trace"] = trace
    elif spec.selector == "cv":
        chosen, trace = select_cv(sample, kernel, bandwidth_grid, x)
        b = np.full(x.shape, chosen)
        extra["trace"] = trace
    else:
        k = int(spec.arg) if spec.arg is not None else default_knn_neighbors(sample.m)
        b = np.maximum(knn_bandwidth(sample, min(k, sample.m), x), KNN_FLOOR)
        extra["k_neighbors"] = k
    values = hazard_estimate(sample, kernel, b, x)
    return EstimateCurve(x, values, np.asarray(b, dtype=float), kernel, str(spec), extra)


class KernelHazard(BaseEstimator):
    """Kernel-smoothed Nelson-Aalen hazard rate estimator.

    Parameters
    ----------
    kernel : {"gamma", "gaussian", "lognormal"}, default="gamma"
    bandwidth : float or {"gl-global", "gl-local", "cv", "knn"}, default="gl-global"
        A fixed bandwidth, or the name of a data-driven selector.
    n_neighbors : int, optional
        Neighbour count for ``bandwidth="knn"``; a size-dependent default
        otherwise.
    estimation_grid : int or array-like, default=512
        Points used by the global selectors (and as default pilot grid).  An
        integer asks for that many points up to the 99% sample quantile.
    bandwidth_grid : array-like, optional
        Candidate bandwidths for the selectors.
    penalty : PenaltyConfig, optional
        GL penalty constants.

    Attributes
    ----------
    sample_ : EventSample
    grid_ : ndarray
        Estimation grid used during fitting.
    bandwidth_ : float or ndarray
        Selected bandwidth; an array over ``grid_`` for pointwise selectors.
    selection_trace_ : SelectionTrace or None
    k_sup_ : float or None
        Plug-in sup norm used by GL penalties.
    """

    def __init__(self, kernel="gamma", bandwidth="gl-global", *, n_neighbors=None,
                 estimation_grid=512, bandwidth_grid=None, penalty=None):
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.n_neighbors = n_neighbors
        self.estimation_grid = estimation_grid
        self.bandwidth_grid = bandwidth_grid
        self.penalty = penalty

    def _grid(self, sample, kernel):
        if isinstance(self.estimation_grid, numbers.Integral):
            if self.estimation_grid < 2:
                raise DomainError("estimation_grid needs at least 2 points")
            return default_estimation_grid(sample, kernel, int(self.estimation_grid))
        return np.atleast_1d(check_points(self.estimation_grid))

    def fit(self, X, y=None):
        """Fit on event times ``X`` (1-D, or a single column)."""
        sample = EventSample.from_times(X)
        kernel = get_kernel(self.kernel)
        x = self._grid(sample, kernel)
        cfg = PenaltyConfig() if self.penalty is None else self.penalty
        self.sample_ = sample
        self.kernel_ = kernel
        self.grid_ = x
        self.selection_trace_ = None
        self.k_sup_ = None
        bw = self.bandwidth
        if isinstance(bw, numbers.Real) and not isinstance(bw, bool):
            if not bw > 0:
                raise DomainError(f"bandwidth must be positive, got {bw!r}")
            self.bandwidth_ = float(bw)
        elif bw == "gl-global":
            self.bandwidth_, self.selection_trace_ = select_global(
                sample, kernel, self.bandwidth_grid, cfg, x)
            self.k_sup_ = self.selection_trace_.extra["k_sup"]
        elif bw == "gl-local":
            grid = grid_local(sample.m) if self.bandwidth_grid is None else self.bandwidth_grid
            self._local_grid = grid
            if cfg.k_sup is None:
                top = np.max(getattr(grid, "values", grid))
                cfg = cfg.with_k_sup(pilot_sup(sample, kernel, top, x))
            self._local_cfg = cfg
            self.k_sup_ = cfg.k_sup
            self.bandwidth_, self.selection_trace_ = select_local(sample, kernel, grid, cfg, x)
        elif bw == "cv":
            self.bandwidth_, self.selection_trace_ = select_cv(sample, kernel, self.bandwidth_grid, x)
        elif bw == "knn":
            k = self.n_neighbors or default_knn_neighbors(sample.m)
            if k > sample.m:
                raise DomainError(f"n_neighbors={k} exceeds the sample size {sample.m}")
            self.n_neighbors_ = int(k)
            self.bandwidth_ = np.maximum(knn_bandwidth(sample, self.n_neighbors_, x), KNN_FLOOR)
        else:
            raise DomainError(
                f"bandwidth must be a positive number or one of "
                f"'gl-global', 'gl-local', 'cv', 'knn'; got {bw!r}")
        return self

    def bandwidth_at(self, t):
        """Bandwidth used at the points ``t``."""
        check_is_fitted(self, "sample_")
        t_arr = np.atleast_1d(check_points(t))
        if np.ndim(self.bandwidth_) == 0:
            return np.full(t_arr.shape, self.bandwidth_)
        if self.bandwidth == "knn":
            return np.maximum(knn_bandwidth(self.sample_, self.n_neighbors_, t_arr), KNN_FLOOR)
        b, _ = select_local(self.sample_, self.kernel_, self._local_grid, self._local_cfg, t_arr)
        return b

    def predict(self, t):
        """Estimated hazard rate at ``t``."""
        check_is_fitted(self, "sample_")
        t_arr = np.atleast_1d(check_points(t))
        values = hazard_estimate(self.sample_, self.kernel_, self.bandwidth_at(t_arr), t_arr)
        return float(values[0]) if np.ndim(t) == 0 else values

    def cumulative_hazard(self, t):
        """Nelson-Aalen cumulative hazard at ``t``."""
        check_is_fitted(self, "sample_")
        return nelson_aalen(self.sample_, t)

    def curve(self) -> EstimateCurve:
        """The fitted estimate on ``grid_``."""
        check_is_fitted(self, "sample_")
        b = self.bandwidth_at(self.grid_)
        values = hazard_estimate(self.sample_, self.kernel_, b, self.grid_)
        method = self.bandwidth if isinstance(self.bandwidth, str) else "fixed"
        extra = {} if self.selection_trace_ is None else {"trace": self.selection_trace_}
        return EstimateCurve(self.grid_, values, b, self.kernel_, f"{self.kernel_.name}:{method}", extra)
