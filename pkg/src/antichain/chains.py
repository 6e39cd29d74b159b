"""Markov chain updating functions and models.

Every update is a pure function of (state, randomness) and accepts numpy
arrays, so many coupled chains and replicates can be advanced at once.

* slice sampler for ``pi(x) ~ x**2 exp(-exp(x))`` on ``x >= 0``;
* the two-component mixture posterior sampler used for CFTP, with latent
  indicators and exponential weights;
* the probit Gibbs sampler with latent normals, on the embedded lupus data;
* the unit-circle chain, whose coupled pair is not jointly ergodic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .antithetic_gen import std_normal_cdf, std_normal_quantile
from .datasets import LUPUS_TABLE
from .streams import RandomStream

TWO_PI = 2.0 * np.pi
_TINY = np.finfo(np.float64).tiny


def _check_open_unit(name, u):
    arr = np.asarray(u, dtype=np.float64)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise ValueError(f"{name} must lie in the open interval (0, 1)")
    return arr


# -- slice sampler ------------------------------------------------------------


@dataclass(frozen=True)
class SliceState:
    x: float

    def __post_init__(self):
        if not self.x >= 0:
            raise ValueError("slice state must be >= 0")


def slice_update(x, xi1, xi2):
    """``xi1**(1/3) * log(exp(x) - log(1 - xi2))``; nondecreasing in all arguments."""
    x = np.asarray(x, dtype=np.float64)
    xi1 = _check_open_unit("xi1", xi1)
    xi2 = _check_open_unit("xi2", xi2)
    if np.any(x < 0):
        raise ValueError("slice state must be >= 0")
    a = -np.log1p(-xi2)
    with np.errstate(over="ignore"):
        inner = np.log(np.exp(x) + a)
    big = x > 700.0
    if np.any(big):
        inner = np.where(big, x + np.log1p(a * np.exp(-x)), inner)
    out = np.cbrt(xi1) * inner
    return float(out) if out.ndim == 0 else out


def slice_log_density(x):
    """Unnormalised log target of the slice example."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(x >= 0, 2.0 * np.log(x) - np.exp(x), -np.inf)


def slice_target_cdf(n_grid: int = 20001, upper: float = 6.0) -> Callable:
    """Quadrature CDF of the slice target, as an interpolating callable."""
    grid = np.linspace(0.0, upper, n_grid)
    dens = np.exp(slice_log_density(grid))
    cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
    cum /= cum[-1]
    return lambda x: np.interp(x, grid, cum)


# -- two-component mixture ----------------------------------------------------


def _normal_logpdf(x, mean, var):
    return -0.5 * (np.log(TWO_PI * var) + (x - mean) ** 2 / var)


@dataclass(frozen=True)
class MixtureModel:
    data: np.ndarray
    f0_mean: float = 3.2
    f0_var: float = 3.2
    f1_mean: float = 1.4
    f1_var: float = 1.4

    def __post_init__(self):
        if self.f0_var <= 0 or self.f1_var <= 0:
            raise ValueError("component variances must be positive")
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64).ravel())

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def log_f0(self) -> np.ndarray:
        return _normal_logpdf(self.data, self.f0_mean, self.f0_var)

    @property
    def log_f1(self) -> np.ndarray:
        return _normal_logpdf(self.data, self.f1_mean, self.f1_var)

    @property
    def ratio(self) -> np.ndarray:
        """``f1(x_i) / f0(x_i)``, the only data summary the sampler needs."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_f1 - self.log_f0)


DEFAULT_MIXTURE_SEED = 20050401


def synthetic_mixture(
    n: int = 50,
    seed: int = DEFAULT_MIXTURE_SEED,
    weight: float = 0.33,
    f0=(3.2, 3.2),
    f1=(1.4, 1.4),
) -> MixtureModel:
    """Data drawn from ``weight * N(f0) + (1 - weight) * N(f1)`` (mean, variance)."""
    stream = RandomStream(seed, stream_id=0xDA7A)
    comp0 = stream.uniform(n) < weight
    z = stream.normal(n)
    x = np.where(comp0, f0[0] + np.sqrt(f0[1]) * z, f1[0] + np.sqrt(f1[1]) * z)
    return MixtureModel(x, f0[0], f0[1], f1[0], f1[1])


@dataclass(frozen=True)
class MixtureState:
    """Mixing weight ``p`` with the indicators ``z`` that produced it."""

    p: float
    z: np.ndarray
    m: int


def mixture_thresholds(p: float, model: MixtureModel) -> np.ndarray:
    """``p f0 / (p f0 + (1 - p) f1)`` for every datum."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p >= 1.0:
        return np.ones(model.n)
    if p <= 0.0:
        return np.zeros(model.n)
    return p / (p + (1.0 - p) * model.ratio)


def mixture_indicator_step(p: float, u_block, model: MixtureModel):
    """Latent indicators ``z`` (0 = first component) and ``m = #{z_i = 0}``."""
    u = np.asarray(u_block, dtype=np.float64)
    if p >= 1.0:
        z = np.zeros(model.n, dtype=np.int8)
    elif p <= 0.0:
        z = np.ones(model.n, dtype=np.int8)
    else:
        z = (u > mixture_thresholds(p, model)).astype(np.int8)
    return z, int(model.n - z.sum())


def mixture_p_update(m: int, w_block) -> float:
    """Ratio of the first ``m + 1`` weights to the total of all ``n + 2``."""
    w = np.asarray(w_block, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if not 0 <= m <= w.shape[0] - 2:
        raise ValueError("m out of range")
    cum = np.cumsum(w)
    return float(cum[m] / cum[-1])


def mixture_psi(p: float, u_block, w_block, model: MixtureModel) -> float:
    _, m = mixture_indicator_step(p, u_block, model)
    return mixture_p_update(m, w_block)


def mixture_log_posterior(p, model: MixtureModel):
    """Unnormalised log posterior of ``p`` under a flat prior."""
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        lp = np.log(p)[..., None] + model.log_f0
        lq = np.log1p(-p)[..., None] + model.log_f1
    return np.logaddexp(lp, lq).sum(axis=-1)


def mixture_posterior_density(p, model: MixtureModel, grid_n: int = 2001):
    """Posterior density of ``p`` scaled so the maximum over a grid is 1."""
    grid = np.linspace(0.0, 1.0, grid_n)
    ref = mixture_log_posterior(grid, model).max()
    return np.exp(mixture_log_posterior(p, model) - ref)


def mixture_posterior_cdf(model: MixtureModel, n_grid: int = 20001) -> Callable:
    grid = np.linspace(0.0, 1.0, n_grid)
    dens = mixture_posterior_density(grid, model)
    cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
    cum /= cum[-1]
    return lambda p: np.interp(p, grid, cum)


# -- probit regression ----------------------------------------------------------


@dataclass(frozen=True)
class ProbitModel:
    X: np.ndarray
    y: np.ndarray
    xtx_inv: np.ndarray = field(repr=False)
    chol: np.ndarray = field(repr=False)
    hat: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(cls, X, y) -> "ProbitModel":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int8)
        xtx_inv = np.linalg.inv(X.T @ X)
        chol = np.linalg.cholesky(xtx_inv)
        return cls(X, y, xtx_inv, chol, xtx_inv @ X.T)

    @classmethod
    def from_table(cls, table=LUPUS_TABLE) -> "ProbitModel":
        rows, ys = [], []
        for igg, iga, cases, total in table:
            for j in range(total):
                rows.append((1.0, igg, iga))
                ys.append(1 if j < cases else 0)
        return cls.from_arrays(rows, ys)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class ProbitState:
    beta: np.ndarray
    psi: np.ndarray


def probit_beta_step(psi, model: ProbitModel, z):
    """``beta = L z + (X'X)^{-1} X' psi`` with ``L L' = (X'X)^{-1}``."""
    psi = np.asarray(psi, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if psi.shape[-1] != model.n or z.shape[-1] != model.p:
        raise ValueError("dimension mismatch in probit beta step")
    return psi @ model.hat.T + z @ model.chol.T


def truncated_normal_inv(mu, sigma, y, u):
    """Inverse-CDF draw from ``N(mu, sigma**2)`` truncated to the sign of ``y``.

    ``y = 1`` gives a positive value, ``y = 0`` a negative one; the output is
    nondecreasing in ``u``.  The upper tail is evaluated through the
    complementary probability so large ``|mu/sigma|`` stays finite.
    """
    u = _check_open_unit("u", u)
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    y = np.asarray(y)
    pos = y > 0
    # reflect y = 0 onto the positive case: Z0(mu, u) = -Z1(-mu, 1 - u)
    m = np.where(pos, mu, -mu)
    uu = np.where(pos, u, 1.0 - u)
    a = -m / sigma
    # 1 - [Phi(a) + u (1 - Phi(a))] = (1 - u) Phi(-a)
    q = np.clip((1.0 - uu) * std_normal_cdf(-a), 1e-300, 1.0 - 1e-16)
    z1 = np.maximum(m - sigma * std_normal_quantile(q), _TINY)
    out = np.where(pos, z1, -z1)
    return float(out) if out.ndim == 0 else out


def probit_psi_step(beta, model: ProbitModel, u):
    mu = np.asarray(beta, dtype=np.float64) @ model.X.T
    return truncated_normal_inv(mu, 1.0, model.y, u)


def probit_mle(model: ProbitModel, tol: float = 1e-10, max_iter: int = 200):
    """Damped Newton fit; returns ``(beta_hat, standard_errors)``."""
    X, y = model.X, model.y.astype(np.float64)
    beta = np.zeros(model.p)

    def loglik(b):
        eta = X @ b
        return float(np.sum(y * _log_ndtr(eta) + (1 - y) * _log_ndtr(-eta)))

    cur = loglik(beta)
    for _ in range(max_iter):
        eta = X @ beta
        s = 2 * y - 1
        lam = s * np.exp(_log_phi(eta) - _log_ndtr(s * eta))
        grad = X.T @ lam
        w = lam * (lam + eta)
        hess = -(X.T * w) @ X
        step = np.linalg.solve(hess, -grad)
        t = 1.0
        while t > 1e-8:
            cand = beta + t * step
            val = loglik(cand)
            if val >= cur - 1e-14:
                break
            t *= 0.5
        beta, prev = cand, cur
        cur = val
        if np.max(np.abs(t * step)) < tol and abs(cur - prev) < tol:
            break
    eta = X @ beta
    s = 2 * y - 1
    lam = s * np.exp(_log_phi(eta) - _log_ndtr(s * eta))
    w = lam * (lam + eta)
    info = (X.T * w) @ X
    return beta, np.sqrt(np.diag(np.linalg.inv(info)))


def _log_ndtr(x):
    from scipy.special import log_ndtr

    return log_ndtr(x)


def _log_phi(x):
    return -0.5 * x * x - 0.5 * np.log(TWO_PI)


def probit_starts(model: ProbitModel, strategy: str = "mle"):
    """Starting value for the probit chains.

    ``mle``: the maximum likelihood estimate.  ``2sd``: intercept moved up by
    two standard errors and slopes moved down by two.  ``extreme``: the same
    pattern at four standard errors.
    """
    beta, sd = probit_mle(model)
    if strategy == "mle":
        return beta
    mult = {"2sd": 2.0, "extreme": 4.0}.get(strategy)
    if mult is None:
        raise ValueError(f"unknown start strategy {strategy!r}")
    sign = -np.ones_like(beta)
    sign[0] = 1.0
    return beta + mult * sign * sd


# -- unit circle chain ----------------------------------------------------------


@dataclass(frozen=True)
class CircleState:
    thetaX: float
    thetaY: float


def circle_update(state, theta):
    """Reflect both points through chords of angle ``theta`` and ``pi - theta``.

    Accepts a :class:`CircleState` or a ``(thetaX, thetaY)`` pair of arrays.
    """
    tx, ty = (state.thetaX, state.thetaY) if isinstance(state, CircleState) else state
    theta = np.asarray(theta, dtype=np.float64)
    if np.any((theta < 0) | (theta >= np.pi)):
        raise ValueError("theta must lie in [0, pi)")
    nx = np.mod(-np.asarray(tx) + np.pi + 2.0 * theta, TWO_PI)
    ny = np.mod(-np.asarray(ty) + np.pi - 2.0 * theta, TWO_PI)
    if isinstance(state, CircleState):
        return CircleState(float(nx), float(ny))
    return nx, ny


def circle_tau(state):
    """Acute angle between the chord through both points and the horizontal."""
    tx, ty = (state.thetaX, state.thetaY) if isinstance(state, CircleState) else state
    d = np.mod(np.asarray(tx) + np.asarray(ty) - np.pi, TWO_PI)
    out = 0.5 * np.minimum(d, TWO_PI - d)
    return float(out) if np.ndim(out) == 0 else out


def circle_start(tau: float) -> CircleState:
    """A state on the absorbing class with acute angle ``tau``."""
    if not 0.0 <= tau <= np.pi / 2:
        raise ValueError("tau must lie in [0, pi/2]")
    return CircleState(0.0, float(np.mod(np.pi + 2.0 * tau, TWO_PI)))


# -- estimand registry ----------------------------------------------------------


@dataclass(frozen=True)
class EstimandFn:
    name: str
    fn: Callable
    monotone: bool

    def __call__(self, x):
        return self.fn(x)


def _indicator(c):
    return EstimandFn(f"indicator:{c:g}", lambda x: (np.asarray(x) <= c).astype(np.float64), True)


def _odds_q(beta):
    beta = np.asarray(beta)
    eta = beta[..., 0] - 0.5 * beta[..., 1] + 1.5 * beta[..., 2]
    return std_normal_cdf(eta) / std_normal_cdf(-eta)


ESTIMANDS = {
    "identity": EstimandFn("identity", lambda x: np.asarray(x, dtype=np.float64), True),
    "sin5": EstimandFn("sin5", lambda x: np.sin(5.0 * np.asarray(x)), False),
    "rational": EstimandFn("rational", lambda x: 2.0 * np.asarray(x) / (1.0 + np.asarray(x) ** 2), False),
    "quadratic": EstimandFn("quadratic", lambda x: np.asarray(x) * (1.0 - 5.0 * np.asarray(x)), False),
    "beta0": EstimandFn("beta0", lambda b: np.asarray(b)[..., 0], True),
    "beta1": EstimandFn("beta1", lambda b: np.asarray(b)[..., 1], True),
    "ld50": EstimandFn("ld50", lambda b: -np.asarray(b)[..., 0] / np.asarray(b)[..., 1], False),
    "odds_q": EstimandFn("odds_q", _odds_q, False),
}

PROBIT_ESTIMANDS = ("mean_beta0", "mean_beta1", "var_beta0", "var_beta1", "mean_ld50", "mean_odds_q")


def get_estimand(name: str) -> EstimandFn:
    """Look up an estimand; ``indicator:<c>`` builds ``1{x <= c}``."""
    if name.startswith("indicator"):
        _, _, c = name.partition(":")
        return _indicator(float(c) if c else 0.5)
    try:
        return ESTIMANDS[name]
    except KeyError:
        raise ValueError(f"unknown estimand {name!r}") from None
