"""Variance reduction factors and autocovariance estimators.

All estimators work across independent replicates: a replicate is one joint
draw of ``k`` exchangeable values (or ``k`` coupled chains of length ``m``).
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, replace

import numpy as np


class DegenerateEstimandError(ValueError):
    """The estimand has zero variance across replicates."""


class InsufficientReplicationError(ValueError):
    pass


@dataclass(frozen=True)
class VrfReport:
    k: int
    replicates: int
    rho_hat: float
    s_k: float
    se_s: float
    sigma_f2: float
    c_k: float | None = None
    t_k: float | None = None
    tau_k: float | None = None
    tau_1: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _vrf_core(y) -> VrfReport:
    """``Var(sum_j Y_j) / sum_j Var(Y_j)`` over rows of ``y`` (shape R x k).

    The correlation is the pooled exchangeable estimate, so
    ``s_k = 1 + (k - 1) * rho_hat``.  The standard error is a
    delete-one-replicate jackknife computed from running sums.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("expected a (replicates, k) array")
    R, k = y.shape
    if R < 3:
        raise InsufficientReplicationError("need at least 3 replicates")
    yc = y - y.mean(axis=0)
    s = yc.sum(axis=1)
    sq = (yc * yc).sum(axis=1)
    num = float(s @ s)
    den = float(sq.sum())
    if den == 0.0:
        raise DegenerateEstimandError("estimand has zero variance")
    s_k = num / den
    rho = (s_k - 1.0) / (k - 1) if k > 1 else 0.0
    shrink = R / (R - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = (num - shrink * s * s) / (den - shrink * sq)
    loo = loo[np.isfinite(loo)]
    se = float(np.sqrt((R - 1.0) / R * np.sum((loo - loo.mean()) ** 2)))
    return VrfReport(k, R, rho, s_k, se, den / ((R - 1) * k))


def vrf_size_fixed(samples) -> VrfReport:
    """Size-fixed VRF from ``samples`` of shape (replicates, k)."""
    return _vrf_core(samples)


def vrf_generalized(trajectories, f=None) -> VrfReport:
    """VRF of the pooled chain average for coupled chains.

    ``trajectories`` is a :class:`CoupledTrajectories` or an array of shape
    (replicates, k, m).  Each chain contributes the sum of ``f`` over its
    ``m`` recorded steps; within- and between-chain covariances are then
    estimated across replicates.
    """
    vals = getattr(trajectories, "states", trajectories)
    vals = np.asarray(vals if f is None else f(vals), dtype=np.float64)
    if vals.ndim != 3:
        raise ValueError("expected values of shape (replicates, k, m)")
    if vals.shape[0] < 2:
        raise InsufficientReplicationError("covariances need replicated runs")
    return _vrf_core(vals.sum(axis=2))


def vrf_time_fixed(report: VrfReport, tau_k: float, tau_1: float) -> VrfReport:
    """Attach ``C_k = (tau_k / k) / tau_1`` and ``T_k = C_k * S_k``."""
    if tau_k <= 0 or tau_1 <= 0:
        raise ValueError("timings must be positive")
    c_k = (tau_k / report.k) / tau_1
    return replace(report, c_k=c_k, t_k=c_k * report.s_k, tau_k=tau_k, tau_1=tau_1)


def median_time(fn, repeats: int = 31) -> float:
    """Median wall time of ``fn()`` over ``repeats`` calls."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


@dataclass(frozen=True)
class AutocovEstimates:
    times: np.ndarray
    gamma: np.ndarray  # (k, g, g) within-chain
    gamma_se: np.ndarray
    beta: np.ndarray  # (k, k, g, g) between-chain; diagonal j1 == j2 is nan
    beta_se: np.ndarray

    def max_between_z(self) -> float:
        """Largest between-chain covariance in SE units (NaN-safe)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            z = self.beta / self.beta_se
        z = np.where(self.beta_se > 0, z, np.where(self.beta > 0, np.inf, -np.inf))
        off = ~np.eye(self.beta.shape[0], dtype=bool)
        return float(np.nanmax(z[off]))


def estimate_autocovs(values, times, min_replicates: int = 100) -> AutocovEstimates:
    """Moment estimates of within- and between-chain autocovariances.

    ``values`` has shape (replicates, k, m); ``times`` selects the recorded
    steps forming the grid.  SEs are the replicate SD of the centred
    products divided by ``sqrt(R)``.
    """
    v = np.asarray(values, dtype=np.float64)
    R, k, _ = v.shape
    if R < min_replicates:
        raise InsufficientReplicationError(f"need >= {min_replicates} replicates, got {R}")
    times = np.asarray(times, dtype=np.int64)
    x = v[:, :, times]
    xc = x - x.mean(axis=0)
    # prod[r, j1, j2, t1, t2]
    prod = xc[:, :, None, :, None] * xc[:, None, :, None, :]
    cov = prod.sum(axis=0) / (R - 1)
    se = prod.std(axis=0, ddof=1) / np.sqrt(R)
    j = np.arange(k)
    gamma = cov[j, j]
    gamma_se = se[j, j]
    beta = cov.copy()
    beta_se = se.copy()
    beta[j, j] = np.nan
    beta_se[j, j] = np.nan
    return AutocovEstimates(times, gamma, gamma_se, beta, beta_se)


@dataclass(frozen=True)
class PooledBetweenCov:
    times: np.ndarray
    cov: np.ndarray  # (g,) equal-time covariance averaged over chain pairs
    se: np.ndarray
    total_cov: float  # covariance of chain totals over all recorded steps
    total_se: float

    def max_z(self) -> float:
        """Largest estimate in SE units across equal times and totals."""
        z = [c / s if s > 0 else (np.inf if c > 0 else -np.inf) for c, s in zip(self.cov, self.se)]
        tz = self.total_cov / self.total_se if self.total_se > 0 else (np.inf if self.total_cov > 0 else -np.inf)
        return float(max(z + [tz]))


def _pair_products(xc):
    # mean over ordered pairs j != j' of xc_j * xc_j', per replicate
    k = xc.shape[1]
    s = xc.sum(axis=1)
    return (s * s - (xc * xc).sum(axis=1)) / (k * (k - 1))


def pooled_between_cov(values, times=None, min_replicates: int = 100) -> PooledBetweenCov:
    """Between-chain covariances pooled over exchangeable chain pairs.

    ``values`` has shape (replicates, k, m).  Returns the equal-time
    covariance at each of ``times`` (default: every step) and the
    covariance between chain totals, each with a replicate-based SE.
    """
    v = np.asarray(values, dtype=np.float64)
    R, k, m = v.shape
    if k < 2:
        raise ValueError("need at least two chains")
    if R < min_replicates:
        raise InsufficientReplicationError(f"need >= {min_replicates} replicates, got {R}")
    times = np.arange(m) if times is None else np.asarray(times, dtype=np.int64)
    shrink = R / (R - 1.0)
    x = v[:, :, times]
    p = _pair_products(x - x.mean(axis=0)) * shrink
    tot = v.sum(axis=2)
    pt = _pair_products(tot - tot.mean(axis=0)) * shrink
    return PooledBetweenCov(
        times,
        p.mean(axis=0),
        p.std(axis=0, ddof=1) / np.sqrt(R),
        float(pt.mean()),
        float(pt.std(ddof=1) / np.sqrt(R)),
    )
