"""Parametric hazard rates used as ground truth in simulations.

Each model provides the hazard ``k``, its first two derivatives, the
cumulative hazard ``A(t) = int_0^t k`` and the induced distribution
``F = 1 - exp(-A)``.  Event times are drawn by inverse transform,
``tau = A^{-1}(E)`` with ``E ~ Exp(1)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .exceptions import DomainError, NumericalError

__all__ = [
    "HazardModel",
    "ConstantHazard",
    "ConstExpHazard",
    "AbsLinearHazard",
    "BumpMixtureHazard",
    "TabulatedHazard",
    "hazard_from_dict",
    "table_scenario_hazard",
]


def _arr(t):
    return np.asarray(t, dtype=float)


def _out(values, t):
    return float(values) if np.ndim(t) == 0 else values


class HazardModel:
    """Base class; subclasses implement ``_k``, ``_dk``, ``_d2k`` and ``_cum``."""

    family = "abstract"
    # horizon used to validate nonnegativity and compute the sup
    check_horizon = 1000.0

    def _validate(self):
        grid = np.linspace(0.0, self.check_horizon, 20001)
        k = self._k(grid)
        if not np.all(np.isfinite(k)) or np.any(k < -1e-15):
            raise DomainError(f"{self.family} hazard must be finite and nonnegative")

    def hazard(self, t):
        t_arr = _arr(t)
        return _out(np.where(t_arr >= 0, self._k(np.maximum(t_arr, 0.0)), 0.0), t)

    def derivative(self, t, order=1):
        if order not in (1, 2):
            raise DomainError("only first and second derivatives are available")
        t_arr = np.maximum(_arr(t), 0.0)
        return _out(self._dk(t_arr) if order == 1 else self._d2k(t_arr), t)

    def cumulative_hazard(self, t):
        t_arr = _arr(t)
        return _out(np.where(t_arr > 0, self._cum(np.maximum(t_arr, 0.0)), 0.0), t)

    def survival(self, t):
        return _out(np.exp(-_arr(self.cumulative_hazard(t))), t)

    def cdf(self, t):
        return _out(-np.expm1(-_arr(self.cumulative_hazard(t))), t)

    def pdf(self, t):
        return _out(_arr(self.hazard(t)) * _arr(self.survival(t)), t)

    def sup(self, upper=None):
        """Supremum of ``k`` on ``[0, upper]`` (dense-grid maximum)."""
        upper = self.check_horizon if upper is None else float(upper)
        return float(np.max(self._k(np.linspace(0.0, upper, 20001))))

    def inverse_cumulative(self, e):
        """Solve ``A(t) = e`` by bracketed, bisection-safeguarded Newton steps."""
        e = np.atleast_1d(_arr(e))
        if np.any(e < 0) or not np.all(np.isfinite(e)):
            raise DomainError("inverse cumulative hazard needs finite e >= 0")
        lo = np.zeros_like(e)
        hi = np.ones_like(e)
        for _ in range(2100):
            short = self._cum(hi) < e
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            bad = e[self._cum(hi) < e][0]
            raise NumericalError(f"cumulative hazard never reaches E={bad!r}")
        # first-order start; falls back to the midpoint when k(0) = 0
        k0 = float(self._k(np.zeros(1))[0])
        t = e / k0 if k0 > 0 else 0.5 * (lo + hi)
        t = np.where((t > lo) & (t < hi), t, 0.5 * (lo + hi))
        done = e == 0
        t[done] = 0.0
        for _ in range(2500):
            f = self._cum(t) - e
            lo = np.where(f < 0, t, lo)
            hi = np.where(f > 0, t, hi)
            k = self._k(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                t_new = t - f / k
            bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
            t_new = np.where(bad, 0.5 * (lo + hi), t_new)
            t_new = np.where(done | (f == 0), t, t_new)
            tol = 1e-13 * np.maximum(np.abs(t_new), 1e-300)
            done = done | (np.abs(t_new - t) <= tol) | (hi - lo <= tol)
            t = t_new
            if done.all():
                return t
        bad = e[~done][0]
        raise NumericalError(f"inverse cumulative hazard did not converge for E={bad!r}")

    def to_dict(self):
        return {"family": self.family, "params": _jsonable(asdict(self))}


def _jsonable(d):
    return {k: (list(v) if isinstance(v, (tuple, np.ndarray)) else v) for k, v in d.items()}


@dataclass(frozen=True)
class ConstantHazard(HazardModel):
    a: float
    family = "constant"

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("constant hazard must be positive")

    def _k(self, t):
        return np.full_like(t, self.a, dtype=float)

    def _dk(self, t):
        return np.zeros_like(t, dtype=float)

    _d2k = _dk

    def _cum(self, t):
        return self.a * t

    def sup(self, upper=None):
        return float(self.a)

    def inverse_cumulative(self, e):
        e = np.atleast_1d(_arr(e))
        if np.any(e < 0):
            raise DomainError("inverse cumulative hazard needs e >= 0")
        return e / self.a


@dataclass(frozen=True)
class ConstExpHazard(HazardModel):
    """``k(t) = a + c * exp(-d t)``."""

    a: float
    c: float
    d: float
    family = "constexp"

    def __post_init__(self):
        if not self.d > 0:
            raise DomainError("decay rate d must be positive")
        self._validate()

    def _k(self, t):
        return self.a + self.c * np.exp(-self.d * t)

    def _dk(self, t):
        return -self.c * self.d * np.exp(-self.d * t)

    def _d2k(self, t):
        return self.c * self.d ** 2 * np.exp(-self.d * t)

    def _cum(self, t):
        return self.a * t - (self.c / self.d) * np.expm1(-self.d * t)

    def sup(self, upper=None):
        return float(self.a + max(self.c, 0.0))


@dataclass(frozen=True)
class AbsLinearHazard(HazardModel):
    """``k(t) = beta * |slope * t - center|``."""

    beta: float
    slope: float = 1.0 / 3.0
    center: float = 30.0
    family = "abslinear"

    def __post_init__(self):
        if not (self.beta > 0 and self.slope > 0):
            raise DomainError("beta and slope must be positive")

    def _k(self, t):
        return self.beta * np.abs(self.slope * t - self.center)

    def _dk(self, t):
        return self.beta * self.slope * np.sign(self.slope * t - self.center)

    def _d2k(self, t):
        return np.zeros_like(t, dtype=float)

    def _cum(self, t):
        s, c = self.slope, self.center
        t0 = max(c / s, 0.0)
        before = c * t - 0.5 * s * t * t
        if c <= 0:
            return self.beta * (0.5 * s * t * t - c * t)
        at_kink = 0.5 * c * c / s
        after = at_kink + 0.5 * s * (t * t - t0 * t0) - c * (t - t0)
        return self.beta * np.where(t <= t0, before, after)


@dataclass(frozen=True)
class BumpMixtureHazard(HazardModel):
    """``k(t) = a + sum_j w_j * phi((t - c_j)/s_j) / s_j`` (Gaussian bumps)."""

    a: float
    centers: tuple = (0.0, 150.0)
    sds: tuple = (15.0, 15.0)
    weights: tuple = field(default=None)
    family = "bumps"

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        sds = tuple(float(s) for s in self.sds)
        weights = (1.0,) * len(centers) if self.weights is None else tuple(
            float(w) for w in self.weights)
        if not (len(centers) == len(sds) == len(weights)):
            raise DomainError("centers, sds and weights must have equal length")
        if any(s <= 0 for s in sds) or any(w < 0 for w in weights) or self.a < 0:
            raise DomainError("bump sds must be positive, weights and a nonnegative")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "sds", sds)
        object.__setattr__(self, "weights", weights)
        self._validate()

    def _bumps(self):
        return zip(self.centers, self.sds, self.weights)

    def _k(self, t):
        out = np.full_like(t, self.a, dtype=float)
        for c, s, w in self._bumps():
            z = (t - c) / s
            out = out + w * np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))
        return out

    def _dk(self, t):
        out = np.zeros_like(t, dtype=float)
        for c, s, w in self._bumps():
            z = (t - c) / s
            out = out - w * z / s * np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))
        return out

    def _d2k(self, t):
        out = np.zeros_like(t, dtype=float)
        for c, s, w in self._bumps():
            z = (t - c) / s
            out = out + w * (z * z - 1) / s ** 2 * np.exp(-0.5 * z * z) / (
                s * math.sqrt(2 * math.pi))
        return out

    def _cum(self, t):
        out = self.a * t
        for c, s, w in self._bumps():
            out = out + w * (special.ndtr((t - c) / s) - special.ndtr(-c / s))
        return out


@dataclass(frozen=True)
class TabulatedHazard(HazardModel):
    """Piecewise-linear hazard through ``(grid, values)``, flat outside."""

    grid: tuple
    values: tuple
    family = "tabulated"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise DomainError("tabulated hazard needs matching 1-D grid/values, length >= 2")
        if g[0] < 0 or np.any(np.diff(g) <= 0):
            raise DomainError("tabulated grid must be nonnegative and strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("tabulated hazard values must be finite and nonnegative")
        object.__setattr__(self, "grid", tuple(map(float, g)))
        object.__setattr__(self, "values", tuple(map(float, v)))

    @property
    def _g(self):
        return np.asarray(self.grid)

    @property
    def _v(self):
        return np.asarray(self.values)

    def _k(self, t):
        return np.interp(t, self._g, self._v)

    def _dk(self, t):
        g, v = self._g, self._v
        slopes = np.diff(v) / np.diff(g)
        j = np.searchsorted(g, t, side="right") - 1
        inside = (j >= 0) & (j < g.size - 1)
        return np.where(inside, slopes[np.clip(j, 0, g.size - 2)], 0.0)

    def _d2k(self, t):
        return np.zeros_like(t, dtype=float)

    def _cum(self, t):
        g, v = self._g, self._v
        t = np.asarray(t, dtype=float)
        nodes = v[0] * g[0] + np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(g))))
        j = np.clip(np.searchsorted(g, t, side="right") - 1, 0, g.size - 1)
        dt = t - g[j]
        slopes = np.concatenate((np.diff(v) / np.diff(g), [0.0]))
        inside = np.where(t < g[0], v[0] * t, nodes[j] + v[j] * dt + 0.5 * slopes[j] * dt * dt)
        return inside

    def sup(self, upper=None):
        return float(np.max(self._v))


_FAMILIES = {
    "constant": ConstantHazard,
    "constexp": ConstExpHazard,
    "abslinear": AbsLinearHazard,
    "bumps": BumpMixtureHazard,
    "tabulated": TabulatedHazard,
}


def hazard_from_dict(spec) -> HazardModel:
    """Build a model from ``{"family": name, "params": {...}}``."""
    if isinstance(spec, HazardModel):
        return spec
    try:
        family = str(spec["family"]).lower()
        params = dict(spec.get("params", {}))
    except (TypeError, KeyError, AttributeError) as exc:
        raise DomainError(f"hazard spec must be a mapping with 'family': {spec!r}") from exc
    cls = _FAMILIES.get(family)
    if cls is None:
        raise DomainError(f"unknown hazard family {family!r}; expected one of {sorted(_FAMILIES)}")
    for key in ("centers", "sds", "weights", "grid", "values"):
        if isinstance(params.get(key), list):
            params[key] = tuple(params[key])
    try:
        return cls(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {family}: {exc}") from exc


def table_scenario_hazard() -> ConstExpHazard:
    """The decreasing hazard ``0.007 + 0.03 exp(-0.07 t)`` used for the tables."""
    return ConstExpHazard(a=7e-3, c=3e-2, d=7e-2)
