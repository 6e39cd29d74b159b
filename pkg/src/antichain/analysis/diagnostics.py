"""Distributional and dependence diagnostics."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


def ks_statistic(draws, cdf=None, other=None) -> float:
    """Kolmogorov-Smirnov distance of ``draws`` to ``cdf`` or to a second sample."""
    x = np.sort(np.asarray(draws, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    if other is not None:
        y = np.sort(np.asarray(other, dtype=np.float64).ravel())
        if y.size == 0:
            raise ValueError("empty sample")
        pts = np.concatenate([x, y])
        fx = np.searchsorted(x, pts, side="right") / n
        fy = np.searchsorted(y, pts, side="right") / y.size
        return float(np.max(np.abs(fx - fy)))
    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical(n: int, level: float = 0.99) -> float:
    """Asymptotic one-sample KS critical value, ``sqrt(-log(alpha/2)/2) / sqrt(n)``."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return float(np.sqrt(-0.5 * np.log((1.0 - level) / 2.0)) / np.sqrt(n))


@dataclass(frozen=True)
class DependenceDiagnostic:
    grid: np.ndarray
    lower_excess: np.ndarray
    upper_excess: np.ndarray
    lower_se: np.ndarray
    upper_se: np.ndarray

    @property
    def max_lower_z(self) -> float:
        return _max_z(self.lower_excess, self.lower_se)

    @property
    def max_upper_z(self) -> float:
        return _max_z(self.upper_excess, self.upper_se)


def _max_z(excess, se):
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, excess / se, np.where(excess > 0, np.inf, 0.0))
    return float(np.max(z))


def nlod_nuod_check(samples, grid) -> DependenceDiagnostic:
    """Orthant excesses ``P(all X <= x) - prod P(X_i <= x_i)`` and the upper analogue.

    ``grid`` is either an array of points with one column per sample column
    or a 1-D set of levels expanded to the full product grid.  Positive
    excess means the negative-orthant inequality is violated.  SEs are
    binomial on the joint probability.
    """
    x = np.asarray(samples, dtype=np.float64)
    n, d = x.shape
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim == 1:
        g = np.array(list(itertools.product(g, repeat=d)))
    if g.shape[1] != d:
        raise ValueError("grid points must have one coordinate per column")
    lo_ex, up_ex, lo_se, up_se = (np.empty(len(g)) for _ in range(4))
    for i, pt in enumerate(g):
        below = x <= pt
        above = ~below
        pj = np.mean(np.all(below, axis=1))
        qj = np.mean(np.all(above, axis=1))
        lo_ex[i] = pj - np.prod(below.mean(axis=0))
        up_ex[i] = qj - np.prod(above.mean(axis=0))
        lo_se[i] = np.sqrt(pj * (1 - pj) / n)
        up_se[i] = np.sqrt(qj * (1 - qj) / n)
    return DependenceDiagnostic(g, lo_ex, up_ex, lo_se, up_se)


def correlation_with_se(x, y):
    """Sample correlation and its delta-method SE from influence values."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    xc = (x - x.mean()) / x.std()
    yc = (y - y.mean()) / y.std()
    r = float(np.mean(xc * yc))
    infl = xc * yc - 0.5 * r * (xc * xc + yc * yc)
    return r, float(infl.std(ddof=1) / np.sqrt(n))
