"""Bandwidth grids and data-driven bandwidth selection.

Four selectors are provided:

* :func:`select_local` - pointwise Goldenshluger-Lepski (GL) selection,
* :func:`select_global` - GL selection with an ``L2`` criterion,
* :func:`select_cv` - least-squares leave-one-out cross-validation,
* :func:`knn_bandwidth` - k-th nearest neighbour distances.

GL selection compares every candidate ``b`` to the estimators built with
``max(b, b')``.  With ``V`` a variance-order penalty,

    A(b) = max_{b'} ( |k_{b'} - k_{max(b, b')}|^2 - V(b') )_+

and the selected bandwidth minimizes ``A(b) + V(b)``.  Exact ties are broken
toward the largest bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from ._validation import check_count, check_points, check_positive
from .estimators import _as_sample
from .exceptions import DomainError, EmptyGridError
from .kernels import _check_point, _fast_window, _log_density_unchecked, get_kernel, weighted_kernel_sum

__all__ = [
    "BandwidthGrid",
    "PenaltyConfig",
    "SelectionTrace",
    "grid_local",
    "grid_global",
    "default_cv_grid",
    "estimate_matrix",
    "pilot_sup",
    "penalty_local",
    "penalty_global",
    "select_local",
    "select_global",
    "select_cv",
    "cv_criterion",
    "knn_bandwidth",
    "default_knn_neighbors",
    "KNN_FLOOR",
]

KNN_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class BandwidthGrid:
    """Ascending, unique candidate bandwidths built for sample size ``m``."""

    values: np.ndarray
    m: int
    gamma_exponent: float = 0.5

    def __post_init__(self):
        v = np.unique(np.asarray(self.values, dtype=float))
        if v.size == 0:
            raise EmptyGridError("bandwidth grid is empty")
        if np.any(v <= 0) or not np.all(np.isfinite(v)):
            raise DomainError("bandwidths must be positive and finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values, m=None, gamma_exponent=0.5):
        v = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(v, int(v.size if m is None else m), gamma_exponent)

    @property
    def s_sum(self) -> float:
        """``sum_b 1/(m b^gamma)`` over the grid."""
        return float(np.sum(1.0 / (self.m * self.values ** self.gamma_exponent)))

    def __len__(self):
        return int(self.values.size)

    def __iter__(self):
        return iter(self.values.tolist())

    def __repr__(self):
        return f"BandwidthGrid(m={self.m}, n={len(self)}, range=[{self.values[0]:.4g}, {self.values[-1]:.4g}])"


def _finish_grid(values, m, bound, exempt=()):
    values = np.unique(np.asarray(values, dtype=float))
    floor = min(1.0, 6.0 / math.log(m))
    root = np.sqrt(values)
    if bound == "lower":
        keep = (root >= floor) & (values <= 1.0)
    elif bound == "upper":
        keep = root <= floor
    elif bound == "none":
        keep = values <= 1.0
    else:
        raise DomainError(f"bound must be 'upper', 'lower' or 'none', got {bound!r}")
    keep |= np.isin(values, np.asarray(exempt, dtype=float)) & (values <= 1.0)
    values = values[keep][:m]
    if values.size == 0:
        raise EmptyGridError(
            f"bandwidth grid for m={m} is empty with bound={bound!r}; widen the grid")
    return values


def grid_local(m, *, bound="upper", exempt_seed=False, gamma_exponent=0.5) -> BandwidthGrid:
    """Candidate bandwidths for pointwise selection.

    The raw set is ``{400 (log m / m)^2}`` together with ``i log(m)^2 / m``
    for ``1 <= i <= 10 log m`` and ``i = 1 mod 4``.  It is then filtered by
    the threshold ``sqrt(b)`` vs ``min(1, 6/log m)``.

    Parameters
    ----------
    m : int
        Sample size, at least 8.
    bound : {"upper", "lower", "none"}
        ``"upper"`` keeps ``sqrt(b) <= min(1, 6/log m)`` (small bandwidths, the
        reading that reproduces the reported selections), ``"lower"`` keeps
        ``sqrt(b) >= min(1, 6/log m)`` together with ``b <= 1``.
    exempt_seed : bool
        Keep the seed point ``400 (log m / m)^2`` whatever the filter says.
    """
    m = check_count(m, "m", minimum=8)
    lm = math.log(m)
    seed = 400.0 * (lm / m) ** 2
    i = np.arange(1, math.floor(10 * lm) + 1)
    i = i[(i - 1) % 4 == 0]
    raw = np.concatenate(([seed], i * lm ** 2 / m))
    values = _finish_grid(raw, m, bound, exempt=(seed,) if exempt_seed else ())
    return BandwidthGrid(values, m, gamma_exponent)


def grid_global(m, *, bound="upper", gamma_exponent=0.5) -> BandwidthGrid:
    """Candidate bandwidths ``i / m^{2/3}``, ``i`` a multiple of 10 up to ``10 sqrt(m)``.

    See :func:`grid_local` for ``bound``.
    """
    m = check_count(m, "m", minimum=8)
    i = np.arange(10, math.floor(10 * math.sqrt(m)) + 1, 10)
    values = _finish_grid(i / m ** (2.0 / 3.0), m, bound)
    return BandwidthGrid(values, m, gamma_exponent)


def default_cv_grid(sample, kernel, n=20) -> BandwidthGrid:
    """Log-spaced CV candidates scaled to the sample's 99% quantile."""
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    scale = float(np.quantile(sample.times, 0.99))
    if kernel.name == "gaussian":
        values = np.geomspace(1e-3, 1e-1, n) * scale
    elif kernel.name == "gamma":
        values = np.geomspace(1e-5, 1e-2, n) * scale
    else:
        values = np.geomspace(1e-3, 1.0, n)
    return BandwidthGrid(values, sample.m, kernel.gamma_exponent)


def _as_grid(grid, m, gamma_exponent):
    if isinstance(grid, BandwidthGrid):
        return grid
    return BandwidthGrid.from_values(grid, m, gamma_exponent)


# --------------------------------------------------------------------------
# penalties


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty constants for GL selection.

    ``mode="practical"`` uses the simplified penalties

        V0(b) = kappa0 log(m) k_sup / (m b^gamma)
        V(b)  = kappa1 (1 + epsilon)^2 k_sup / (m b^gamma)

    ``mode="theory"`` uses the full forms, which also need ``lam``, ``c_s``
    and ``g`` (callables of ``t``) and ``kappa2``.  ``k_sup=None`` means the
    sup norm of the hazard is estimated with :func:`pilot_sup`.
    """

    kappa0: float = 0.03
    kappa1: float = 20.0
    epsilon: float = 0.5
    k_sup: Optional[float] = None
    gamma_exponent: float = 0.5
    mode: str = "practical"
    kappa2: float = 20.0
    lam: float = 1.0
    c_s: Optional[Callable] = None
    g: Optional[Callable] = None

    def __post_init__(self):
        for name in ("kappa0", "kappa1", "epsilon", "gamma_exponent", "kappa2", "lam"):
            check_positive(getattr(self, name), name)
        if self.k_sup is not None:
            check_positive(self.k_sup, "k_sup")
        if self.mode not in ("practical", "theory"):
            raise DomainError(f"mode must be 'practical' or 'theory', got {self.mode!r}")
        if self.mode == "theory" and (self.c_s is None or self.g is None):
            raise DomainError("theory-mode penalties need the c_s and g functions")

    def with_k_sup(self, k_sup):
        return PenaltyConfig(**{**self.__dict__, "k_sup": float(k_sup)})


def _k_sup(cfg):
    if cfg.k_sup is None:
        raise DomainError("PenaltyConfig.k_sup is unset; estimate it with pilot_sup first")
    return cfg.k_sup


def penalty_local(b, cfg: PenaltyConfig, m, t=None):
    """Pointwise penalty ``V0(b, t)``; ``t`` is only used in theory mode."""
    b = np.asarray(b, dtype=float)
    k = _k_sup(cfg)
    base = cfg.kappa0 * math.log(m) * k / (m * b ** cfg.gamma_exponent)
    if cfg.mode == "theory":
        if t is None:
            raise DomainError("theory-mode local penalty needs t")
        base = base * np.exp(k * (t + cfg.lam)) * cfg.c_s(t)
    return float(base) if base.ndim == 0 else base


def penalty_global(b, cfg: PenaltyConfig, m, estimation_grid=None):
    """Integrated penalty ``V(b)``; theory mode integrates over ``estimation_grid``."""
    b = np.asarray(b, dtype=float)
    k = _k_sup(cfg)
    if cfg.mode == "theory":
        if estimation_grid is None:
            raise DomainError("theory-mode global penalty needs the estimation grid")
        x = np.asarray(estimation_grid, dtype=float)
        g = np.asarray([cfg.g(s) for s in x], dtype=float)
        cs = np.asarray([cfg.c_s(s) for s in x], dtype=float)
        level = integrate.trapezoid(g ** 2 + k * cs * np.exp(k * (x + cfg.lam)), x)
        base = cfg.kappa2 * level / (m * b ** cfg.gamma_exponent)
    else:
        base = cfg.kappa1 * (1.0 + cfg.epsilon) ** 2 * k / (m * b ** cfg.gamma_exponent)
    return float(base) if base.ndim == 0 else base


# --------------------------------------------------------------------------
# selection


@dataclass(frozen=True, eq=False)
class SelectionTrace:
    """Per-bandwidth criterion values of a selection run.

    For pointwise selection the ``a_term``, ``v_term`` and ``criterion``
    arrays have one row per evaluation point and ``chosen`` is an array.
    """

    bandwidths: np.ndarray
    a_term: np.ndarray
    v_term: np.ndarray
    criterion: np.ndarray
    chosen: object
    method: str
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        def conv(x):
            return np.asarray(x).tolist() if isinstance(x, np.ndarray) else x

        return {
            "method": self.method,
            "bandwidths": conv(self.bandwidths),
            "a_term": conv(self.a_term),
            "v_term": conv(self.v_term),
            "criterion": conv(self.criterion),
            "chosen": conv(self.chosen),
            **{k: conv(v) for k, v in self.extra.items()},
        }


def _argmin_largest(criterion):
    """Index of the minimum along the last axis, preferring the last tie."""
    crit = np.asarray(criterion)
    rev = crit[..., ::-1]
    return crit.shape[-1] - 1 - np.argmin(rev, axis=-1)


def estimate_matrix(sample, kernel, bandwidths, points):
    """``k_hat_b(t)`` for every bandwidth (rows) and point (columns)."""
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    points = np.atleast_1d(check_points(points))
    _check_point(kernel, points)
    w = sample.weights
    return np.stack([weighted_kernel_sum(kernel, points, b, sample.times, w) for b in bandwidths])


def pilot_sup(sample, kernel, b, points):
    """Maximum over ``points`` of the estimate at bandwidth ``b``."""
    sample = _as_sample(sample)
    est = weighted_kernel_sum(get_kernel(kernel), np.atleast_1d(points), b,
                              sample.times, sample.weights)
    k = float(np.max(est))
    if not k > 0:
        raise DomainError("pilot estimate of the hazard sup norm is not positive")
    return k


def _default_pilot_points(sample, kernel):
    lower = sample.times[0] if kernel.name == "lognormal" else 0.0
    return np.linspace(lower, sample.times[-1], 256)


def _gl_terms(est, v, norms):
    """A-terms for GL selection given estimates ``est[j, ...]`` and penalties ``v[j]``.

    ``norms`` maps a stack of differences to squared distances.
    """
    n = est.shape[0]
    a = np.empty((n,) + norms(est[:1] - est[:1]).shape[1:])
    for j in range(n):
        # comparison estimator for (b_l, b_j) uses index max(j, l)
        idx = np.maximum(np.arange(n), j)
        d2 = norms(est - est[idx])
        vb = v.reshape(v.shape + (1,) * (d2.ndim - v.ndim)) if v.ndim < d2.ndim else v
        a[j] = np.maximum(0.0, np.max(d2 - vb, axis=0))
    return a


def select_local(sample, kernel, grid=None, cfg=None, t=None, *, pilot_points=None):
    """Pointwise GL bandwidth at each ``t``.

    Returns
    -------
    chosen : float or ndarray
        Selected bandwidth per point (a float when ``t`` is scalar).
    trace : SelectionTrace
    """
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    cfg = PenaltyConfig() if cfg is None else cfg
    grid = grid_local(sample.m) if grid is None else _as_grid(grid, sample.m, cfg.gamma_exponent)
    if t is None:
        raise DomainError("select_local needs evaluation points t")
    t_arr = np.atleast_1d(check_points(t))
    _check_point(kernel, t_arr)
    b = grid.values
    if cfg.k_sup is None:
        if pilot_points is None:
            pilot_points = t_arr if t_arr.size >= 2 else _default_pilot_points(sample, kernel)
        cfg = cfg.with_k_sup(pilot_sup(sample, kernel, b[-1], pilot_points))
    est = estimate_matrix(sample, kernel, b, t_arr)  # (nb, nt)
    if cfg.mode == "theory":
        v = np.stack([penalty_local(b, cfg, sample.m, s) for s in t_arr], axis=1)
    else:
        v = np.broadcast_to(np.asarray(penalty_local(b, cfg, sample.m))[:, None], est.shape)
    a = _gl_terms(est, v, lambda d: d * d)
    crit = a + v
    pick = _argmin_largest(crit.T)
    chosen = b[pick]
    trace = SelectionTrace(b, a.T, np.array(v.T), crit.T, chosen, "gl-local",
                           {"k_sup": cfg.k_sup, "points": t_arr})
    if np.ndim(t) == 0:
        return float(chosen[0]), trace
    return chosen, trace


def select_global(sample, kernel, grid=None, cfg=None, estimation_grid=None):
    """Global GL bandwidth with ``L2`` distances over ``estimation_grid``."""
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    cfg = PenaltyConfig() if cfg is None else cfg
    grid = grid_global(sample.m) if grid is None else _as_grid(grid, sample.m, cfg.gamma_exponent)
    x = np.atleast_1d(check_points(estimation_grid))
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise DomainError("estimation grid needs at least 2 increasing points")
    _check_point(kernel, x)
    b = grid.values
    est = estimate_matrix(sample, kernel, b, x)
    if cfg.k_sup is None:
        cfg = cfg.with_k_sup(max(float(np.max(est[-1])), np.finfo(float).tiny))
    v = np.asarray(penalty_global(b, cfg, sample.m, x), dtype=float).reshape(-1)
    a = _gl_terms(est, v, lambda d: integrate.trapezoid(d * d, x, axis=-1))
    crit = a + v
    j = int(_argmin_largest(crit))
    trace = SelectionTrace(b, a, v, crit, float(b[j]), "gl-global", {"k_sup": cfg.k_sup})
    return float(b[j]), trace


def cv_criterion(sample, kernel, b, estimation_grid, *, restrict=True):
    """Least-squares cross-validation score of bandwidth ``b``.

    ``CV(b) = int k_b^2 - 2 sum_i k_b^{(-i)}(tau_i) / (m - i + 1)``, the
    leave-one-out estimator being rebuilt from the remaining ``m - 1``
    points (so ranks shift).  With ``restrict`` only observations inside the
    estimation interval enter the sum, matching the range of the integral.
    """
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    x = np.atleast_1d(check_points(estimation_grid))
    est = weighted_kernel_sum(kernel, x, b, sample.times, sample.weights)
    return _cv_from_est(sample, kernel, b, x, est, restrict)


def _loo_values(sample, kernel, b, idx):
    """``k^{(-i)}(tau_i)`` for the (0-based) ranks in ``idx``."""
    y = sample.times
    m = sample.m
    right = 1.0 / (m - np.arange(m, dtype=float))  # ranks above i keep their weight
    with np.errstate(divide="ignore"):
        left = 1.0 / (m - 1.0 - np.arange(m, dtype=float))  # ranks below i move up
    left[-1] = 0.0
    t = y[idx]
    bb = np.full(t.shape, float(b))
    lo, hi = _fast_window(kernel, t, bb, 1e-16)
    out = np.zeros(t.shape)
    rows = max(1, (1 << 21) // max(m, 1))
    for start in range(0, t.size, rows):
        sl = slice(start, start + rows)
        j0 = np.searchsorted(y, lo[sl].min(), side="left")
        j1 = np.searchsorted(y, hi[sl].max(), side="right")
        if j1 <= j0:
            continue
        cols = np.arange(j0, j1)
        k = np.exp(_log_density_unchecked(kernel, t[sl, None], bb[sl, None], y[None, j0:j1]))
        ii = idx[sl, None]
        w = np.where(cols[None, :] < ii, left[None, j0:j1],
                     np.where(cols[None, :] > ii, right[None, j0:j1], 0.0))
        out[sl] = np.sum(k * w, axis=1)
    return out


def _cv_from_est(sample, kernel, b, x, est, restrict):
    integral = integrate.trapezoid(est * est, x)
    idx = np.arange(sample.m)
    if restrict:
        idx = idx[(sample.times >= x[0]) & (sample.times <= x[-1])]
    if sample.m < 2 or idx.size == 0:
        return float(integral)
    loo = _loo_values(sample, kernel, b, idx)
    return float(integral - 2.0 * np.sum(loo * sample.weights[idx]))


def select_cv(sample, kernel, grid=None, estimation_grid=None, *, restrict=True):
    """Least-squares cross-validation bandwidth."""
    sample = _as_sample(sample)
    kernel = get_kernel(kernel)
    if sample.m < 3:
        raise DomainError("cross-validation needs at least 3 observations")
    grid = default_cv_grid(sample, kernel) if grid is None else _as_grid(
        grid, sample.m, kernel.gamma_exponent)
    x = np.atleast_1d(check_points(estimation_grid))
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise DomainError("estimation grid needs at least 2 increasing points")
    _check_point(kernel, x)
    b = grid.values
    est = estimate_matrix(sample, kernel, b, x)
    crit = np.array([_cv_from_est(sample, kernel, bj, x, ej, restrict) for bj, ej in zip(b, est)])
    j = int(_argmin_largest(crit))
    zeros = np.zeros_like(crit)
    trace = SelectionTrace(b, zeros, zeros, crit, float(b[j]), "cv")
    return float(b[j]), trace


# --------------------------------------------------------------------------
# nearest neighbours

_KNN_TABLE = {500: 25, 1000: 40, 2000: 60, 4000: 80}


def default_knn_neighbors(m) -> int:
    """Neighbour count used for sample size ``m``."""
    m = check_count(m, "m")
    return min(m, _KNN_TABLE.get(m, max(1, round(1.3 * math.sqrt(m)))))


def knn_bandwidth(sample, k_neighbors, t):
    """Distance from ``t`` to its ``k``-th nearest observation.

    The raw distance is returned (it is 0 when ``t`` sits on an observation
    and ``k = 1``); estimators floor it at :data:`KNN_FLOOR`.
    """
    sample = _as_sample(sample)
    k = check_count(k_neighbors, "k_neighbors")
    if k > sample.m:
        raise DomainError(f"k_neighbors={k} exceeds the sample size {sample.m}")
    t_arr = np.atleast_1d(check_points(t))
    y = sample.times
    pos = np.searchsorted(y, t_arr)
    cand = pos[:, None] + np.arange(-k, k)[None, :]
    valid = (cand >= 0) & (cand < y.size)
    dist = np.where(valid, np.abs(y[np.clip(cand, 0, y.size - 1)] - t_arr[:, None]), np.inf)
    out = np.partition(dist, k - 1, axis=1)[:, k - 1]
    return float(out[0]) if np.ndim(t) == 0 else out
