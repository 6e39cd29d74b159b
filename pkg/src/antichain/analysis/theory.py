"""Closed-form and exact-recursion results for antithetic tuples.

Covers the ILHS joint CDF recursion and its correlation, distance bounds
between ILHS iterations, indicator-estimand VRFs for uniform and normal
tuples, the relative-gain table ``k_alpha`` and the circle-chain
correlation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .._kernels import ilhs_cdf

_SQRT2PI = math.sqrt(2.0 * math.pi)


# -- ILHS -------------------------------------------------------------------------


def ilhs_corr_theory(k: int, t: int) -> float:
    """Pairwise correlation of an ILHS tuple after ``t`` steps."""
    if k < 2 or t < 0:
        raise ValueError("need k >= 2 and t >= 0")
    return -(1.0 - float(k) ** (-2 * t)) / (k - 1)


@dataclass(frozen=True)
class ExactIlhsCdf:
    """Joint CDF of two coordinates of an ILHS k-tuple after ``t`` steps."""

    k: int
    t: int

    def __post_init__(self):
        if self.k < 2 or self.t < 0:
            raise ValueError("need k >= 2 and t >= 0")

    def __call__(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if np.any((u < 0) | (u > 1) | (v < 0) | (v > 1)) or np.any(np.isnan(u) | np.isnan(v)):
            raise ValueError("arguments must lie in [0, 1]")
        out = ilhs_cdf(u, v, self.k, self.t)
        return float(out) if out.ndim == 0 else out


def ilhs_joint_cdf_exact(u, v, k: int, t: int):
    return ExactIlhsCdf(k, t)(u, v)


def unit_grid(n: int = 401) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def hoeffding_corr_from_cdf(cdf, grid_n: int = 401) -> float:
    """``12 * integral (F(u,v) - uv)`` by composite Simpson on a square grid."""
    g = unit_grid(grid_n)
    U, V = np.meshgrid(g, g, indexing="ij")
    diff = cdf(U, V) - U * V
    inner = integrate.simpson(diff, x=g, axis=1)
    return float(12.0 * integrate.simpson(inner, x=g))


def ilhs_distance_bound(k: int, t: int) -> float:
    """Upper bound on ``sup |F_{t+m} - F_t|`` valid for every ``m >= 0``."""
    if k < 2 or t < 1:
        raise ValueError("need k >= 2 and t >= 1")
    return float(k) ** (-(t - 1)) * float(k - 1) ** (-(t + 2))


# name used by the public interface contract
thm7_bound = ilhs_distance_bound


@dataclass(frozen=True)
class KsBoundReport:
    k: int
    t: int
    m: int
    grid_n: int
    d_observed: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.d_observed <= self.bound


def ks_distance_bound_check(k: int, t: int, m: int, grid_n: int = 401) -> KsBoundReport:
    g = unit_grid(grid_n)
    U, V = np.meshgrid(g, g, indexing="ij")
    d = np.max(np.abs(ilhs_cdf(U, V, k, t + m) - ilhs_cdf(U, V, k, t)))
    return KsBoundReport(k, t, m, grid_n, float(d), ilhs_distance_bound(k, t))


# -- indicator estimands, uniform tuples ---------------------------------------------


def _frac(x: float) -> float:
    f = x - math.floor(x)
    # products such as 0.3 * 10 land within rounding of an integer
    if min(f, 1.0 - f) < 1e-12:
        return 0.0
    return f


def indicator_vrf_uniform(c: float, k: int) -> float:
    """VRF of ``1{U <= c}`` for stratified (ILHS) uniform k-tuples."""
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    f = _frac(k * c)
    return (1.0 - f) * f / (k * c * (1.0 - c))


def s_star(k) -> float:
    """Largest indicator VRF over ``c`` for ``k >= 3``."""
    k = float(k)
    return k / (3.0 * k - 4.0 + 2.0 * math.sqrt(2.0 * (k - 1.0) * (k - 2.0)))


S_STAR_LIMIT = 1.0 / (3.0 + 2.0 * math.sqrt(2.0))


def c_star(k: int) -> tuple[float, float]:
    r = math.sqrt(k - 1.0)
    c1 = (1.0 + r / (math.sqrt(2.0 * k - 4.0) + r)) / k
    return c1, 1.0 - c1


def _vrf_slope_sign(c: float, k: int, i: int) -> float:
    # sign of d/dc of (kc - i)(i + 1 - kc) / (kc (1 - c)) inside stratum i
    n = (k * c - i) * (i + 1 - k * c)
    dn = k * (2 * i + 1 - 2 * k * c)
    d = k * c * (1.0 - c)
    dd = k * (1.0 - 2.0 * c)
    return dn * d - n * dd


def indicator_vrf_argmax_numeric(k: int, grid_n: int = 200001, tol: float = 1e-13) -> float:
    """Grid search over ``[1/k, (k-1)/k]`` refined by bisection on the slope.

    Returns the maximizer reflected into ``c <= 1/2``.
    """
    grid = np.linspace(1.0 / k, (k - 1.0) / k, grid_n)
    kc = k * grid
    f = kc - np.floor(kc)
    vals = (1.0 - f) * f / (kc * (1.0 - grid))
    c0 = float(grid[int(np.argmax(vals))])
    if c0 > 0.5:
        c0 = 1.0 - c0
    i = int(math.floor(k * c0))
    step = grid[1] - grid[0]
    lo, hi = max(c0 - step, i / k), min(c0 + step, (i + 1) / k)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _vrf_slope_sign(mid, k, i) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TheoryRow:
    k: int
    s_star: float
    c_star_low: float
    c_star_high: float
    r_k: float


def relative_gain(k: int) -> float:
    return (s_star(3) - s_star(k)) / (s_star(3) - S_STAR_LIMIT)


def indicator_vrf_max(k: int) -> TheoryRow:
    if k < 3:
        raise ValueError("the interior maximizer needs k >= 3")
    c1, c2 = c_star(k)
    return TheoryRow(k, s_star(k), c1, c2, relative_gain(k))


def k_alpha_table(alphas=(0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99), k_max: int = 10 ** 7):
    """Smallest ``k`` whose relative gain reaches each ``alpha``; list of pairs."""
    out = []
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        k = 4
        while relative_gain(k) < a:
            k += 1
            if k > k_max:
                raise RuntimeError("k_alpha scan exceeded k_max")
        out.append((a, k))
    return out


# -- normal tuples -------------------------------------------------------------------


def _phi(t):
    return math.exp(-0.5 * t * t) / _SQRT2PI


def normal_pair_uniform_corr(rho: float) -> float:
    """``Corr(Phi(Z1), Phi(Z2))`` for a standard bivariate normal pair.

    Evaluated as ``12 * integral Phi(rho t / sqrt(2 - rho^2)) Phi(t) phi(t) dt - 3``
    over ``[-8, 8]``; this equals ``(6/pi) arcsin(rho/2)``.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    s = math.sqrt(2.0 - rho * rho)
    val, _ = integrate.quad(
        lambda t: ndtr(rho * t / s) * ndtr(t) * _phi(t), -8.0, 8.0, epsabs=1e-13, epsrel=1e-13, limit=200
    )
    return 12.0 * val - 3.0


def normal_pair_uniform_corr_series(rho: float) -> float:
    """Cubic approximation ``0.955 rho + 0.01 rho^3``."""
    return 0.955 * rho + 0.01 * rho ** 3


def normal_joint_cdf(c: float, k: int) -> float:
    """``P(Z1 <= c, Z2 <= c)`` for normals with correlation ``-1/(k-1)``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    c = min(float(c), 8.0)
    if k == 2:
        return max(2.0 * float(ndtr(c)) - 1.0, 0.0)
    rho = -1.0 / (k - 1.0)
    s = math.sqrt(1.0 - rho * rho)
    if c <= -8.0:
        return 0.0
    val, _ = integrate.quad(
        lambda t: _phi(t) * ndtr((c - rho * t) / s), -8.0, c, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return val


def indicator_vrf_normal(c: float, k: int) -> float:
    """VRF of ``1{Z <= c}`` for normal NA k-tuples."""
    p = float(ndtr(c))
    return 1.0 + (k - 1) * (normal_joint_cdf(c, k) - p * p) / (p * (1.0 - p))


# -- circle chain -------------------------------------------------------------------


def circle_corr_theory(tau: float) -> float:
    if not 0.0 <= tau <= math.pi / 2:
        raise ValueError("tau must lie in [0, pi/2]")
    return -math.cos(2.0 * tau)
