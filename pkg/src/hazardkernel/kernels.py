"""Associated kernel families and their moment functionals.

An associated kernel is a family of probability densities ``kappa_{t,b}``
indexed by an evaluation point ``t`` and a bandwidth ``b``.  Three families
are provided:

* ``gamma``: the Gamma kernel without interior bias, supported on ``[0, inf)``.
  Its shape is ``rho = t/b`` when ``t >= 2b`` and ``(t/b)**2/4 + 1`` otherwise,
  with scale ``b``.
* ``gaussian``: the classical symmetric kernel ``phi((y - t)/b)/b`` on the
  whole real line, ``b`` being the standard deviation.
* ``lognormal``: a lognormal density with location ``log(t)`` and shape
  ``sqrt(b)``.  This parametrization is a stand-in chosen here, not a
  canonical definition; it requires ``t > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special

from .exceptions import DomainError, NumericalError

__all__ = [
    "KernelFamily",
    "Regime",
    "AssociatedKernel",
    "GammaShape",
    "KernelMoments",
    "GAMMA",
    "GAUSSIAN",
    "LOGNORMAL",
    "get_kernel",
    "gamma_shape",
    "density",
    "log_density",
    "kernel_cdf",
    "tail_quantile",
    "kernel_mode",
    "moments",
    "power_integral",
    "integrate_against_kernel",
    "weighted_kernel_sum",
]

# adaptive quadrature tolerances
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9
QUAD_TAIL = 1e-12

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class KernelFamily(str, Enum):
    GAMMA = "gamma"
    GAUSSIAN = "gaussian"
    LOGNORMAL = "lognormal"


class Regime(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class AssociatedKernel:
    """A kernel family; instances are stateless and hashable."""

    family: KernelFamily

    @property
    def name(self) -> str:
        return self.family.value

    @property
    def support_lower(self) -> float:
        return -math.inf if self.family is KernelFamily.GAUSSIAN else 0.0

    @property
    def gamma_exponent(self) -> float:
        # Gaussian reports 1/2 under the b -> b**2 reparametrization
        return 0.5

    def __call__(self, t, b, y):
        return density(self, t, b, y)

    def __repr__(self):
        return f"AssociatedKernel({self.name!r})"


GAMMA = AssociatedKernel(KernelFamily.GAMMA)
GAUSSIAN = AssociatedKernel(KernelFamily.GAUSSIAN)
LOGNORMAL = AssociatedKernel(KernelFamily.LOGNORMAL)

_KERNELS = {k.name: k for k in (GAMMA, GAUSSIAN, LOGNORMAL)}


def get_kernel(kernel) -> AssociatedKernel:
    """Resolve a kernel name (``"gamma"``, ``"gaussian"``, ``"lognormal"``)."""
    if isinstance(kernel, AssociatedKernel):
        return kernel
    if isinstance(kernel, KernelFamily):
        return _KERNELS[kernel.value]
    try:
        return _KERNELS[str(kernel).lower()]
    except KeyError:
        raise DomainError(
            f"unknown kernel {kernel!r}; expected one of {sorted(_KERNELS)}"
        ) from None


@dataclass(frozen=True)
class GammaShape:
    rho: float
    scale: float
    regime: Regime


@dataclass(frozen=True)
class KernelMoments:
    """Moment functionals of ``kappa_{t,b}``.

    ``lambda_bias`` is ``E[Z] - t``, ``variance_z`` is ``Var(Z)``, ``alpha`` and
    ``beta`` are the integrals of ``kappa**2`` and ``kappa**3`` and
    ``sup_density`` is the maximum of the density.
    """

    lambda_bias: float
    variance_z: float
    alpha: float
    beta: float
    sup_density: float


# --------------------------------------------------------------------------
# argument checks


def _check_bandwidth(b, *, theory=False):
    b_arr = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b_arr)) or np.any(b_arr <= 0):
        raise DomainError(f"bandwidth must be positive and finite, got {b!r}")
    if theory and np.any(b_arr > 1):
        raise DomainError(f"moment bounds require b <= 1, got {b!r}")
    return b_arr


def _check_point(kernel, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(t_arr)):
        raise DomainError("evaluation point is NaN")
    if kernel.family is KernelFamily.GAMMA and np.any(t_arr < 0):
        raise DomainError(f"gamma kernel requires t >= 0, got {t!r}")
    if kernel.family is KernelFamily.LOGNORMAL and np.any(t_arr <= 0):
        raise DomainError(f"lognormal kernel requires t > 0, got {t!r}")
    return t_arr


def _scalar_or_array(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


# --------------------------------------------------------------------------
# Gamma shape


def _gamma_rho(t, b):
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    ratio = t / b
    return np.where(t >= 2.0 * b, ratio, 0.25 * ratio * ratio + 1.0)


def gamma_shape(t: float, b: float) -> GammaShape:
    """Shape parameter of the Gamma kernel at ``t`` for bandwidth ``b``.

    >>> gamma_shape(0.4, 0.1).rho
    4.0
    """
    t = float(t)
    b = float(b)
    if not (b > 0 and math.isfinite(b)):
        raise DomainError(f"bandwidth must be positive, got {b!r}")
    if not t >= 0:
        raise DomainError(f"gamma kernel requires t >= 0, got {t!r}")
    if t >= 2.0 * b:
        return GammaShape(t / b, b, Regime.INTERIOR)
    return GammaShape(0.25 * (t / b) ** 2 + 1.0, b, Regime.BOUNDARY)


# --------------------------------------------------------------------------
# densities


def _log_density_unchecked(kernel, t, b, y):
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    fam = kernel.family
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if fam is KernelFamily.GAMMA:
            rho = _gamma_rho(t, b)
            x = y / b
            out = special.xlogy(rho - 1.0, x) - x - np.log(b) - special.gammaln(rho)
            return np.where(y >= 0, out, -np.inf)
        if fam is KernelFamily.GAUSSIAN:
            z = (y - t) / b
            return -0.5 * z * z - np.log(b) - _LOG_SQRT_2PI
        # lognormal
        pos = y > 0
        ly = np.log(np.where(pos, y, 1.0))
        z = (ly - np.log(t)) / np.sqrt(b)
        out = -0.5 * z * z - ly - 0.5 * np.log(b) - _LOG_SQRT_2PI
        return np.where(pos, out, -np.inf)


def log_density(kernel, t, b, y):
    """Logarithm of :func:`density` (``-inf`` outside the support)."""
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    _check_point(kernel, t)
    return _scalar_or_array(_log_density_unchecked(kernel, t, b, y))


def density(kernel, t, b, y):
    """Kernel density ``kappa_{t,b}(y)``; broadcasts over ``t``, ``b``, ``y``.

    The Gamma density is evaluated in log space so that shapes ``t/b`` of
    order ``1e5`` neither overflow nor underflow prematurely.

    Examples
    --------
    >>> density("gamma", 0.0, 0.5, 0.0)
    2.0
    """
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    _check_point(kernel, t)
    return _scalar_or_array(np.exp(_log_density_unchecked(kernel, t, b, y)))


def _cdf_unchecked(kernel, t, b, y, upper=False):
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        x = np.maximum(y, 0.0) / b
        rho = _gamma_rho(t, b)
        if upper:
            return special.gammaincc(rho, x)
        return special.gammainc(rho, x)
    if fam is KernelFamily.GAUSSIAN:
        z = (y - t) / b
        return special.ndtr(-z) if upper else special.ndtr(z)
    with np.errstate(divide="ignore"):
        z = (np.log(np.maximum(y, 0.0)) - np.log(t)) / np.sqrt(b)
    return special.ndtr(-z) if upper else special.ndtr(z)


def kernel_cdf(kernel, t, b, y):
    """``P(Z_{t,b} <= y)``."""
    kernel = get_kernel(kernel)
    _check_bandwidth(b)
    _check_point(kernel, t)
    return _scalar_or_array(_cdf_unchecked(kernel, t, b, y))


def kernel_mode(kernel, t: float, b: float) -> float:
    kernel = get_kernel(kernel)
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        return (float(_gamma_rho(t, b)) - 1.0) * b
    if fam is KernelFamily.GAUSSIAN:
        return float(t)
    return float(t) * math.exp(-b)


def _kernel_mean_sd(kernel, t, b):
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        rho = float(_gamma_rho(t, b))
        return rho * b, math.sqrt(rho) * b
    if fam is KernelFamily.GAUSSIAN:
        return float(t), float(b)
    mean = t * math.exp(b / 2)
    return mean, mean * math.sqrt(math.expm1(b))


def tail_quantile(kernel, t: float, b: float, p: float) -> float:
    """Smallest ``y`` with ``kernel_cdf(kernel, t, b, y) >= p``.

    The root is bracketed by stepping away from the kernel mean in multiples
    of its standard deviation and then refined by Brent's method (bisection
    safeguarded) to a relative tolerance of ``1e-12``.  Upper-tail
    probabilities are solved on the survival function for accuracy.
    """
    kernel = get_kernel(kernel)
    t = float(_check_point(kernel, t))
    b = float(_check_bandwidth(b))
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    mean, sd = _kernel_mean_sd(kernel, t, b)
    lower = kernel.support_lower

    if p <= 0.5:
        def g(y):
            return float(_cdf_unchecked(kernel, t, b, y)) - p
    else:
        q = 1.0 - p

        def g(y):
            return q - float(_cdf_unchecked(kernel, t, b, y, upper=True))

    hi = mean + sd
    step = sd
    for _ in range(400):
        if g(hi) >= 0:
            break
        step *= 2.0
        hi = mean + step
    else:
        raise NumericalError(f"could not bracket quantile p={p} for {kernel} at t={t}, b={b}")

    if math.isfinite(lower):
        lo = lower
        if g(lo) >= 0:
            return lo
    else:
        lo = mean - sd
        step = sd
        for _ in range(400):
            if g(lo) < 0:
                break
            step *= 2.0
            lo = mean - step
        else:
            raise NumericalError(f"could not bracket quantile p={p} for {kernel} at t={t}, b={b}")

    try:
        root = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"quantile search failed: {exc}") from exc
    return root


def _fast_window(kernel, t, b, p):
    """Vectorized lower/upper quantiles used to truncate kernel sums."""
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        rho = _gamma_rho(t, b)
        lo = b * special.gammaincinv(rho, p)
        hi = b * special.gammainccinv(rho, p)
        return lo, hi
    z = special.ndtri(1.0 - p)
    if fam is KernelFamily.GAUSSIAN:
        return t - z * b, t + z * b
    s = np.sqrt(b)
    return t * np.exp(-z * s), t * np.exp(z * s)


# --------------------------------------------------------------------------
# quadrature against the kernel


def _scalar_pdf(kernel, t, b):
    """Fast scalar density closure for quadrature integrands."""
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        rho = float(_gamma_rho(t, b))
        const = -math.log(b) - math.lgamma(rho)
        a = rho - 1.0

        def pdf(y):
            if y < 0:
                return 0.0
            x = y / b
            if x == 0.0:
                return math.exp(const) if a == 0.0 else 0.0
            return math.exp(a * math.log(x) - x + const)

        return pdf
    if fam is KernelFamily.GAUSSIAN:
        const = -math.log(b) - _LOG_SQRT_2PI

        def pdf(y):
            z = (y - t) / b
            return math.exp(-0.5 * z * z + const)

        return pdf
    lt = math.log(t)
    sb = math.sqrt(b)
    const = -0.5 * math.log(b) - _LOG_SQRT_2PI

    def pdf(y):
        if y <= 0:
            return 0.0
        ly = math.log(y)
        z = (ly - lt) / sb
        return math.exp(-0.5 * z * z - ly + const)

    return pdf


def integrate_against_kernel(kernel, t, b, func=None, *, power=1, tail=QUAD_TAIL,
                             lower=None, upper=None, epsabs=QUAD_EPSABS,
                             epsrel=QUAD_EPSREL):
    """Adaptive quadrature of ``func(y) * kappa_{t,b}(y)**power``.

    The range is the kernel's central ``1 - 2*tail`` mass interval (clipped by
    ``lower``/``upper``), split at the kernel mode and one standard deviation
    either side so that very concentrated kernels are resolved.
    """
    kernel = get_kernel(kernel)
    t = float(t)
    b = float(b)
    pdf = _scalar_pdf(kernel, t, b)
    lo = tail_quantile(kernel, t, b, tail)
    hi = tail_quantile(kernel, t, b, 1.0 - tail)
    if lower is not None:
        lo = max(lo, float(lower))
    if upper is not None:
        hi = min(hi, float(upper))
    if not hi > lo:
        return 0.0

    if func is None:
        if power == 1:
            def integrand(y):
                return pdf(y)
        else:
            def integrand(y):
                return pdf(y) ** power
    elif power == 1:
        def integrand(y):
            return func(y) * pdf(y)
    else:
        def integrand(y):
            return func(y) * pdf(y) ** power

    mode = kernel_mode(kernel, t, b)
    mean, sd = _kernel_mean_sd(kernel, t, b)
    cuts = sorted({c for c in (mode - sd, mode, mode + sd, mean) if lo < c < hi})
    edges = [lo, *cuts, hi]
    total = 0.0
    for a, c in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(integrand, a, c, epsabs=epsabs, epsrel=epsrel, limit=200)
        if not math.isfinite(val):
            raise NumericalError(f"non-finite quadrature on [{a}, {c}] for {kernel} t={t} b={b}")
        tol = max(epsabs, epsrel * abs(val))
        if err > 100 * tol:
            raise NumericalError(
                f"quadrature did not converge on [{a}, {c}]: estimated error {err:.3g}"
            )
        total += val
    return total


# --------------------------------------------------------------------------
# moment functionals


def power_integral(kernel, t: float, b: float, r: int) -> float:
    """``int kappa_{t,b}(y)**r dy`` (closed form where one exists)."""
    kernel = get_kernel(kernel)
    t = float(_check_point(kernel, t))
    b = float(_check_bandwidth(b))
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        # int (y^{rho-1} e^{-y/b})^r dy = Gamma(r(rho-1)+1) (b/r)^{r(rho-1)+1}
        rho = float(_gamma_rho(t, b))
        a = r * (rho - 1.0) + 1.0
        log_val = (math.lgamma(a) - a * math.log(r) - (r - 1) * math.log(b)
                   - r * math.lgamma(rho))
        return math.exp(log_val)
    if fam is KernelFamily.GAUSSIAN:
        # int phi_b^r = (2 pi b^2)^{-(r-1)/2} r^{-1/2}
        return (2.0 * math.pi * b * b) ** (-(r - 1) / 2.0) / math.sqrt(r)
    return integrate_against_kernel(kernel, t, b, power=r)


def _sup_density(kernel, t, b):
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        rho = float(_gamma_rho(t, b))
        if rho <= 1.0:
            return 1.0 / b
        a = rho - 1.0
        return math.exp(a * math.log(a) - a - math.log(b) - math.lgamma(rho))
    if fam is KernelFamily.GAUSSIAN:
        return 1.0 / (b * math.sqrt(2.0 * math.pi))
    return math.exp(b / 2.0 - math.log(t) - 0.5 * math.log(2.0 * math.pi * b))


def moments(kernel, t: float, b: float) -> KernelMoments:
    """Bias, variance, ``int kappa**2``, ``int kappa**3`` and sup of the kernel.

    Gamma uses closed forms throughout: ``E[Z] = rho*b`` and ``Var(Z) = rho*b**2``
    give the bias and variance in both regimes, and the power integrals follow
    from the Gamma-function identity for ``int y^{r(rho-1)} e^{-ry/b}``.  The
    Gaussian family is exact as well.  Lognormal moments are integrated
    numerically.

    Raises
    ------
    DomainError
        If ``b > 1`` (the moment bounds are stated for ``b <= 1`` only).
    """
    kernel = get_kernel(kernel)
    t = float(_check_point(kernel, t))
    b = float(_check_bandwidth(b, theory=True))
    fam = kernel.family
    if fam is KernelFamily.GAMMA:
        # rho*b - t vanishes identically in the interior; avoid rounding noise
        if t >= 2 * b:
            lam, var = 0.0, t * b
        else:
            lam, var = t * t / (4 * b) + b - t, t * t / 4 + b * b
    elif fam is KernelFamily.GAUSSIAN:
        lam = 0.0
        var = b * b
    else:
        lam = integrate_against_kernel(kernel, t, b, lambda y: y - t)
        mean = t + lam
        var = integrate_against_kernel(kernel, t, b, lambda y: (y - mean) ** 2)
    return KernelMoments(
        lambda_bias=lam,
        variance_z=var,
        alpha=power_integral(kernel, t, b, 2),
        beta=power_integral(kernel, t, b, 3),
        sup_density=_sup_density(kernel, t, b),
    )


# --------------------------------------------------------------------------
# kernel sums used by the estimators

_BLOCK = 1 << 21
_WINDOW_TAIL = 1e-16


def weighted_kernel_sum(kernel, t, b, y, weights, *, block=_BLOCK):
    """``sum_j kappa_{t_i, b_i}(y_j) * weights_j`` for every ``t_i``.

    ``y`` must be sorted ascending.  For each block of evaluation points only
    the observations inside the kernels' ``1 - 2e-16`` mass window are
    visited; the discarded terms are below double precision of the kernel
    mass.
    """
    kernel = get_kernel(kernel)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b = np.broadcast_to(np.asarray(b, dtype=float), t.shape)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    out = np.zeros(t.shape, dtype=float)
    if y.size == 0 or t.size == 0:
        return out
    lo, hi = _fast_window(kernel, t, b, _WINDOW_TAIL)
    order = np.argsort(lo, kind="stable")
    rows = max(1, block // y.size)
    for start in range(0, t.size, rows):
        idx = order[start:start + rows]
        j0 = np.searchsorted(y, lo[idx].min(), side="left")
        j1 = np.searchsorted(y, hi[idx].max(), side="right")
        if j1 <= j0:
            continue
        logk = _log_density_unchecked(kernel, t[idx, None], b[idx, None], y[None, j0:j1])
        # einsum rather than BLAS keeps the summation order independent of threading
        out[idx] = np.einsum("ij,j->i", np.exp(logk), w[j0:j1])
    return out
