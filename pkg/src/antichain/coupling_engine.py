"""Drivers for antithetically coupled chains.

Forward coupling advances ``k`` chains with one negatively associated tuple
per scalar uniform.  Backward coupling (CFTP) runs bottom and top chains
from time ``-T`` to 0 with memoized per-time randomness, doubling ``T``
until they meet.  Both drivers are batched across independent replicates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .antithetic_gen import GeneratorSpec, exp_from_uniform, normal_na_tuples, uniform_tuples
from .chains import MixtureModel, MixtureState, circle_start, circle_update, mixture_psi
from .streams import RandomStream

# CFTP replicates share a ledger in groups of this size; each replicate's
# randomness depends only on (seed, group, position in group).
CFTP_GROUP = 128


class NonCoalescenceError(RuntimeError):
    """CFTP ran past ``t_max`` without the extremal chains meeting."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class LedgerContractError(ValueError):
    pass


def _uniform_block(stream: RandomStream, shape):
    return stream.uniform(shape)


class RandomnessLedger:
    """Memoized randomness per negative time index.

    The block for time ``t`` comes from ``stream.child(-t)`` and is stored on
    first use, so reruns with a larger window reuse it bit for bit.
    """

    def __init__(self, stream: RandomStream, make_block: Callable = _uniform_block):
        self.stream = stream
        self._make = make_block
        self._blocks: dict[int, np.ndarray] = {}

    def get_block(self, t: int, shape) -> np.ndarray:
        if t >= 0:
            raise ValueError("ledger times are negative")
        shape = tuple(np.atleast_1d(shape).tolist()) if not isinstance(shape, tuple) else shape
        blk = self._blocks.get(t)
        if blk is None:
            blk = np.asarray(self._make(self.stream.child(-t), shape))
            if blk.shape != shape:
                raise LedgerContractError(f"block factory returned {blk.shape}, expected {shape}")
            blk.setflags(write=False)
            self._blocks[t] = blk
        elif blk.shape != shape:
            raise LedgerContractError(f"time {t} holds a block of shape {blk.shape}, not {shape}")
        return blk

    @property
    def materialized(self) -> int:
        return len(self._blocks)


def ledger_get_block(ledger: RandomnessLedger, t: int, shape) -> np.ndarray:
    return ledger.get_block(t, shape)


class ProcessLedger:
    """One process's view of a cross-coupled ledger.

    The parent holds blocks of shape ``(groups, size, k)``; this view returns
    ``block[group, :, process]``.
    """

    def __init__(self, parent: RandomnessLedger, parent_shape, group: int, process: int):
        self.parent = parent
        self.parent_shape = tuple(parent_shape)
        self.group = group
        self.process = process

    def get_block(self, t: int, shape) -> np.ndarray:
        shape = tuple(np.atleast_1d(shape).tolist()) if not isinstance(shape, tuple) else shape
        if shape != (self.parent_shape[1],):
            raise LedgerContractError(f"process blocks have shape {(self.parent_shape[1],)}")
        return self.parent.get_block(t, self.parent_shape)[self.group, :, self.process]

    @property
    def materialized(self) -> int:
        return self.parent.materialized


def cross_coupled_ledger(spec: GeneratorSpec, stream: RandomStream, groups: int, size: int):
    """Ledger whose every scalar position holds one antithetic k-tuple."""

    def make(s, shape):
        return uniform_tuples(spec, s, groups * size).reshape(groups, size, spec.k)

    return RandomnessLedger(stream, make), (groups, size, spec.k)


@dataclass(frozen=True)
class CftpConfig:
    t_start: int = 1
    growth: int = 2
    t_max: int = 2 ** 20

    def __post_init__(self):
        if self.t_start < 1 or self.growth < 2 or self.t_max < self.t_start:
            raise ValueError("invalid CFTP schedule")

    def schedule(self):
        t = self.t_start
        while t <= self.t_max:
            yield t
            t *= self.growth


@dataclass
class CftpResult:
    draws: np.ndarray
    t_final: np.ndarray
    blocks_materialized: int
    spec: GeneratorSpec | None = None


@dataclass(frozen=True)
class MixtureUpdater:
    """Monotone mixture update packaged for the CFTP drivers.

    A block holds ``n`` indicator uniforms followed by ``n + 2`` uniforms
    that become exponential weights.
    """

    model: MixtureModel
    bottom: float = 0.0
    top: float = 1.0

    @property
    def block_size(self) -> int:
        return 2 * self.model.n + 2

    def split(self, block):
        n = self.model.n
        return block[..., :n], exp_from_uniform(block[..., n:])

    def step(self, p, block) -> float:
        u, w = self.split(block)
        return mixture_psi(p, u, w, self.model)

    def window(self, blocks):
        u, w = self.split(np.asarray(blocks))
        cumw = np.cumsum(w, axis=-1)
        p_lo, p_hi, _, _, same = _kernels.cftp_mixture_window(self.model.ratio, u, cumw)
        return p_lo, p_hi, same


def coalescence_test_mixture(bottom_state: MixtureState, top_state: MixtureState) -> bool:
    """Equal indicator vectors; with shared weights this forces equal ``p``."""
    return bool(np.array_equal(np.asarray(bottom_state.z), np.asarray(top_state.z)))


def run_cftp_single_process(psi, ledger, config: CftpConfig = CftpConfig(), bottom=None, top=None):
    """Draw one exact sample; returns ``(draw, T_final)``.

    ``psi`` is either a :class:`MixtureUpdater` (fast window path) or a
    callable ``psi(state, block)`` with a ``block_size`` attribute or
    explicit ``bottom``/``top``; generic states coalesce on equality.
    """
    size = psi.block_size
    lo0 = psi.bottom if bottom is None else bottom
    hi0 = psi.top if top is None else top
    last = None
    for T in config.schedule():
        blocks = np.stack([ledger.get_block(t, (size,)) for t in range(-T, 0)])
        if hasattr(psi, "window") and bottom is None and top is None:
            lo, hi, same = psi.window(blocks)
        else:
            lo, hi = lo0, hi0
            for b in blocks:
                lo, hi = psi.step(lo, b), psi.step(hi, b)
            same = lo == hi
        if same:
            return lo, T
        last = (lo, hi)
    raise NonCoalescenceError(
        f"no coalescence by T = {config.t_max}",
        {"t_max": config.t_max, "bottom": last[0], "top": last[1], "blocks": ledger.materialized},
    )


def _batched_window(ratio, u, cumw):
    """Vectorized bottom/top run; ``u`` is (A, T, n), ``cumw`` is (A, T, n+2)."""
    A, T, n = u.shape
    rows = np.arange(A)
    p_lo = np.zeros(A)
    p_hi = np.ones(A)
    same = np.ones(A, dtype=bool)
    for r in range(T):
        ur = u[:, r]
        z_lo = _batched_indicators(p_lo, ratio, ur)
        z_hi = _batched_indicators(p_hi, ratio, ur)
        m_lo = n - z_lo.sum(axis=1)
        m_hi = n - z_hi.sum(axis=1)
        p_lo = cumw[rows, r, m_lo] / cumw[:, r, n + 1]
        p_hi = cumw[rows, r, m_hi] / cumw[:, r, n + 1]
        same = np.all(z_lo == z_hi, axis=1)
    return p_lo, p_hi, same


def _batched_indicators(p, ratio, u):
    pc = p[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        thr = pc / (pc + (1.0 - pc) * ratio)
    z = u > thr
    z = np.where(pc >= 1.0, False, np.where(pc <= 0.0, True, z))
    return z.astype(np.int64)


def run_cftp_k_processes(
    model: MixtureModel,
    spec: GeneratorSpec,
    stream: RandomStream,
    replicates: int = 1,
    config: CftpConfig = CftpConfig(),
) -> CftpResult:
    """``replicates`` joint draws of ``k`` antithetically coupled CFTP processes.

    Each process doubles its own window.  Returns draws of shape
    ``(replicates, k)``.  Replicates in group ``g`` use ``stream.child(g)``.
    """
    upd = MixtureUpdater(model)
    n, k, size = model.n, spec.k, upd.block_size
    ratio = model.ratio
    draws = np.empty((replicates, k))
    t_final = np.zeros((replicates, k), dtype=np.int64)
    materialized = 0
    for g, start in enumerate(range(0, replicates, CFTP_GROUP)):
        rg = min(CFTP_GROUP, replicates - start)
        ledger, shape = cross_coupled_ledger(spec, stream.child(g), CFTP_GROUP, size)
        cache: dict[int, tuple] = {}

        def derived(t):
            if t not in cache:
                blk = np.moveaxis(ledger.get_block(t, shape)[:rg], 2, 1).reshape(rg * k, size)
                u, w = upd.split(blk)
                cache[t] = (u, np.cumsum(w, axis=-1))
            return cache[t]

        active = np.arange(rg * k)
        out = np.empty(rg * k)
        tf = np.zeros(rg * k, dtype=np.int64)
        T = None
        for T in config.schedule():
            parts = [derived(t) for t in range(-T, 0)]
            u = np.stack([p[0][active] for p in parts], axis=1)
            cw = np.stack([p[1][active] for p in parts], axis=1)
            lo, hi, same = _batched_window(ratio, u, cw)
            out[active[same]] = lo[same]
            tf[active[same]] = T
            active = active[~same]
            if active.size == 0:
                break
        if active.size:
            raise NonCoalescenceError(
                f"no coalescence by T = {config.t_max}",
                {"t_max": config.t_max, "pending": int(active.size), "blocks": ledger.materialized},
            )
        draws[start:start + rg] = out.reshape(rg, k)
        t_final[start:start + rg] = tf.reshape(rg, k)
        materialized += ledger.materialized
    return CftpResult(draws, t_final, materialized, spec)


# -- forward coupling -------------------------------------------------------------


@dataclass(frozen=True)
class CoupledTrajectories:
    """Recorded values with shape ``(replicates, k, m, ...)``."""

    states: np.ndarray
    starts: np.ndarray
    spec: GeneratorSpec
    burn_in: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return self.states.shape[0]

    @property
    def k(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.states.shape[2]


def step_randomness(spec: GeneratorSpec, stream: RandomStream, replicates: int, n_uniforms: int, n_normals: int):
    """Uniforms ``(R, k, n_uniforms)`` and normals ``(R, k, n_normals)`` for one step.

    Every scalar position is one tuple across the ``k`` chains.
    """
    R, k = replicates, spec.k
    u = z = None
    if n_uniforms:
        u = uniform_tuples(spec, stream, R * n_uniforms).reshape(R, n_uniforms, k).transpose(0, 2, 1)
    if n_normals:
        if spec.method == "independent" or k == 1:
            zz = stream.normal((R * n_normals, k))
        else:
            zz = normal_na_tuples(stream, R * n_normals, k)
        z = zz.reshape(R, n_normals, k).transpose(0, 2, 1)
    return u, z


def run_forward_coupled(
    update: Callable,
    starts,
    spec: GeneratorSpec,
    m: int,
    stream: RandomStream,
    n_uniforms: int = 1,
    n_normals: int = 0,
    replicates: int = 1,
    burn_in: int = 0,
    observe: Callable | None = None,
) -> CoupledTrajectories:
    """Advance ``k`` coupled chains for ``burn_in + m`` steps.

    ``update(states, u, z)`` maps states of shape ``(R, k, ...)`` forward
    given the step randomness.  Step ``t`` draws from ``stream.child(t)``.
    ``observe`` selects what is recorded (default: the state itself).
    """
    starts = np.asarray(starts, dtype=np.float64)
    if starts.shape[0] != spec.k:
        raise ValueError(f"{starts.shape[0]} starts for k = {spec.k}")
    if m < 1:
        raise ValueError("m must be >= 1")
    state = np.broadcast_to(starts, (replicates,) + starts.shape).copy()
    obs = observe or (lambda s: s)
    rec = None
    for t in range(burn_in + m):
        u, z = step_randomness(spec, stream.child(t), replicates, n_uniforms, n_normals)
        state = update(state, u, z)
        if t >= burn_in:
            val = np.asarray(obs(state))
            if rec is None:
                rec = np.empty((replicates, spec.k, m) + val.shape[2:])
            rec[:, :, t - burn_in] = val
    return CoupledTrajectories(rec, starts, spec, burn_in)


def slice_step(state, u, z=None):
    from .chains import slice_update

    return slice_update(state, u[..., 0], u[..., 1])


def make_probit_step(model):
    """Gibbs step on ``beta`` (shape ``(R, k, p)``): latent draw then beta draw."""
    from .chains import probit_beta_step, truncated_normal_inv

    def step(beta, u, z):
        mu = beta @ model.X.T
        psi = truncated_normal_inv(mu, 1.0, model.y, u)
        return probit_beta_step(psi, model, z)

    return step


def run_circle_pair(tau: float, steps: int, stream: RandomStream):
    """Trajectory of ``(thetaX, thetaY)`` started on the class with angle ``tau``."""
    st = circle_start(tau)
    theta = np.pi * stream.uniform(steps)
    tx = np.empty(steps)
    ty = np.empty(steps)
    x, y = st.thetaX, st.thetaY
    for i in range(steps):
        x, y = circle_update((x, y), theta[i])
        tx[i], ty[i] = x, y
    return tx, ty
