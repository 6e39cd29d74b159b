"""Experiment drivers behind the ``experiment`` command.

Each driver runs an antithetic arm and an independent control arm on
disjoint stream ids and returns VRF rows plus per-run details.  Sample
budgets follow total-budget semantics: ``n = k * m`` draws per replicate
unless ``fixed_m`` is set.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .analysis import (
    correlation_with_se,
    circle_corr_theory,
    vrf_generalized,
    vrf_size_fixed,
    vrf_time_fixed,
)
from .antithetic_gen import GeneratorSpec
from .chains import (
    MixtureModel,
    PROBIT_ESTIMANDS,
    ProbitModel,
    circle_tau,
    get_estimand,
    probit_starts,
    synthetic_mixture,
)
from .coupling_engine import (
    CftpConfig,
    make_probit_step,
    run_cftp_k_processes,
    run_circle_pair,
    run_forward_coupled,
    slice_step,
)
from .datasets import LUPUS_TABLE, read_grouped_csv
from .streams import RandomStream

EXPERIMENTS = ("mixture-cftp", "slice", "probit", "circle")

DEFAULT_ESTIMANDS = {
    "mixture-cftp": ["identity", "indicator:0.33"],
    "slice": ["identity", "indicator:1"],
    "probit": list(PROBIT_ESTIMANDS),
    "circle": [],
}


@dataclass
class ExperimentConfig:
    experiment: str
    method: str = "ilhs"
    ks: list = field(default_factory=lambda: [2])
    T: int = 7
    replicates: int = 200
    estimands: list | None = None
    seed: int = 0
    budget: int | None = None
    fixed_m: int | None = None
    burn_in: int = 0
    data: str = "synthetic"
    data_seed: int | None = None
    n_data: int = 50
    start: str = "mle"
    slice_start: float = 1.0
    taus: list = field(default_factory=lambda: [0.0, np.pi / 8, np.pi / 4, 3 * np.pi / 8])
    steps: int = 100000
    timing: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.estimands is None:
            self.estimands = list(DEFAULT_ESTIMANDS[self.experiment])
        self.ks = [int(k) for k in self.ks]
        self.taus = [float(t) for t in self.taus]

    def chain_length(self, k: int) -> int:
        """Steps per chain: ``fixed_m`` if set, else ``budget / k`` exactly."""
        if self.fixed_m is not None:
            return int(self.fixed_m)
        if self.budget is None:
            raise ValueError("either budget or fixed_m is required")
        if self.budget % k:
            raise ValueError(f"budget {self.budget} is not divisible by k = {k}")
        return self.budget // k

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def arm_stream(seed: int, experiment: str, arm: int, k: int) -> RandomStream:
    """Disjoint stream per (experiment, arm, k); arm 0 antithetic, 1 control."""
    eid = EXPERIMENTS.index(experiment)
    return RandomStream(seed, stream_id=(eid << 32) | (arm << 16) | k)


def _specs(cfg: ExperimentConfig, k: int):
    return GeneratorSpec(cfg.method, k, cfg.T), GeneratorSpec("independent", k)


def _row(k, estimand, spec, rep, c_k=None):
    if c_k is not None:
        rep = vrf_time_fixed(rep, c_k * k, 1.0)
    return {
        "k": k,
        "estimand": estimand,
        "method": spec.label,
        "s_k": rep.s_k,
        "se": rep.se_s,
        "c_k": rep.c_k,
        "t_k": rep.t_k,
    }


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def load_mixture(cfg: ExperimentConfig) -> MixtureModel:
    if cfg.data == "synthetic":
        kw = {} if cfg.data_seed is None else {"seed": cfg.data_seed}
        return synthetic_mixture(n=cfg.n_data, **kw)
    data = np.loadtxt(cfg.data, delimiter=",", ndmin=1)
    return MixtureModel(data)


def load_probit(cfg: ExperimentConfig) -> ProbitModel:
    if cfg.data in ("embedded", "synthetic"):
        return ProbitModel.from_table(LUPUS_TABLE)
    return ProbitModel.from_table(read_grouped_csv(cfg.data))


def run_mixture(cfg: ExperimentConfig) -> dict:
    model = load_mixture(cfg)
    rows, traj, ledger = [], {}, {}
    for k in cfg.ks:
        outs = []
        for arm, spec in enumerate(_specs(cfg, k)):
            res, wall = _timed(
                lambda: run_cftp_k_processes(model, spec, arm_stream(cfg.seed, cfg.experiment, arm, k), cfg.replicates, CftpConfig())
            )
            outs.append((spec, res, wall))
            ledger[f"k{k}_{spec.label}"] = {
                "blocks": res.blocks_materialized,
                "mean_T": float(res.t_final.mean()),
                "max_T": int(res.t_final.max()),
            }
        c_k = outs[0][2] / outs[1][2] if cfg.timing else None
        for arm, (spec, res, _) in enumerate(outs):
            vals = {}
            for name in cfg.estimands:
                f = get_estimand(name)
                v = f(res.draws)
                vals[name] = v
                rows.append(_row(k, name, spec, vrf_size_fixed(v), (c_k if arm == 0 else 1.0) if cfg.timing else None))
            traj[(k, spec.label)] = (res.draws[:, :, None], {n: v[:, :, None] for n, v in vals.items()})
    return {"rows": rows, "trajectories": traj, "details": {"ledger": ledger, "n_data": model.n}}


def run_slice(cfg: ExperimentConfig) -> dict:
    rows, traj = [], {}
    for k in cfg.ks:
        m = cfg.chain_length(k)
        outs = []
        for arm, spec in enumerate(_specs(cfg, k)):
            tr, wall = _timed(
                lambda: run_forward_coupled(
                    slice_step,
                    np.full(k, cfg.slice_start),
                    spec,
                    m,
                    arm_stream(cfg.seed, cfg.experiment, arm, k),
                    n_uniforms=2,
                    replicates=cfg.replicates,
                    burn_in=cfg.burn_in,
                )
            )
            outs.append((spec, tr, wall))
        c_k = outs[0][2] / outs[1][2] if cfg.timing else None
        for arm, (spec, tr, _) in enumerate(outs):
            vals = {}
            for name in cfg.estimands:
                v = get_estimand(name)(tr.states)
                vals[name] = v
                rows.append(_row(k, name, spec, vrf_generalized(v), (c_k if arm == 0 else 1.0) if cfg.timing else None))
            traj[(k, spec.label)] = (tr.states, vals)
    return {"rows": rows, "trajectories": traj, "details": {}}


def probit_ensemble_estimates(betas) -> np.ndarray:
    """Six posterior summaries per replicate from draws of shape (R, k, m, 3).

    Columns follow ``PROBIT_ESTIMANDS``: means of beta0 and beta1, their
    variances, the mean LD50 and the mean odds Q.
    """
    b = np.asarray(betas)
    R = b.shape[0]
    flat = b.reshape(R, -1, b.shape[-1])
    ld50 = get_estimand("ld50")(flat)
    q = get_estimand("odds_q")(flat)
    return np.column_stack(
        [
            flat[:, :, 0].mean(axis=1),
            flat[:, :, 1].mean(axis=1),
            flat[:, :, 0].var(axis=1, ddof=1),
            flat[:, :, 1].var(axis=1, ddof=1),
            ld50.mean(axis=1),
            q.mean(axis=1),
        ]
    )


def run_probit_chains(model: ProbitModel, spec: GeneratorSpec, start, m: int, stream: RandomStream, replicates: int, burn_in: int = 0):
    """Draws of beta with shape (replicates, k, m, p)."""
    starts = np.broadcast_to(np.asarray(start, dtype=np.float64), (spec.k, model.p))
    tr = run_forward_coupled(
        make_probit_step(model),
        starts,
        spec,
        m,
        stream,
        n_uniforms=model.n,
        n_normals=model.p,
        replicates=replicates,
        burn_in=burn_in,
    )
    return tr.states


def run_probit(cfg: ExperimentConfig) -> dict:
    model = load_probit(cfg)
    start = probit_starts(model, cfg.start)
    rows, traj, details = [], {}, {"start": start.tolist()}
    for k in cfg.ks:
        m = cfg.chain_length(k)
        outs = []
        for arm, spec in enumerate(_specs(cfg, k)):
            betas, wall = _timed(
                lambda: run_probit_chains(model, spec, start, m, arm_stream(cfg.seed, cfg.experiment, arm, k), cfg.replicates, cfg.burn_in)
            )
            outs.append((spec, betas, wall, probit_ensemble_estimates(betas)))
        c_k = outs[0][2] / outs[1][2] if cfg.timing else None
        var_ctrl = outs[1][3].var(axis=0, ddof=1)
        R = cfg.replicates
        for arm, (spec, betas, _, est) in enumerate(outs):
            var = est.var(axis=0, ddof=1)
            for i, name in enumerate(PROBIT_ESTIMANDS):
                s = float(var[i] / var_ctrl[i])
                se = s * np.sqrt(4.0 / (R - 1)) if arm == 0 else 0.0
                ck = (c_k if arm == 0 else 1.0) if cfg.timing else None
                rows.append(
                    {"k": k, "estimand": name, "method": spec.label, "s_k": s, "se": se,
                     "c_k": ck, "t_k": None if ck is None else ck * s}
                )
            details[f"k{k}_{spec.label}"] = {
                "estimate": est.mean(axis=0).tolist(),
                "replicate_sd": est.std(axis=0, ddof=1).tolist(),
            }
            vals = {
                "beta0": betas[..., 0],
                "beta1": betas[..., 1],
                "ld50": get_estimand("ld50")(betas),
                "odds_q": get_estimand("odds_q")(betas),
            }
            traj[(k, spec.label)] = (betas[..., 0], vals)
    return {"rows": rows, "trajectories": traj, "details": details}


def run_circle(cfg: ExperimentConfig) -> dict:
    rows = []
    for i, tau in enumerate(cfg.taus):
        tx, ty = run_circle_pair(tau, cfg.steps, RandomStream(cfg.seed, stream_id=(3 << 32) | i))
        r, se = correlation_with_se(np.cos(tx), np.cos(ty))
        drift = abs(circle_tau((tx[-1], ty[-1])) - tau)
        rows.append({"tau": tau, "corr": r, "se": se, "theory": circle_corr_theory(tau), "tau_drift": drift})
    return {"rows": rows, "trajectories": {}, "details": {}}


RUNNERS = {"mixture-cftp": run_mixture, "slice": run_slice, "probit": run_probit, "circle": run_circle}


def run_experiment(cfg: ExperimentConfig) -> dict:
    out = RUNNERS[cfg.experiment](cfg)
    out["report"] = {
        "version": __version__,
        "seed": cfg.seed,
        "config": json.loads(cfg.to_json()),
        "cells": out["rows"],
        "details": out["details"],
    }
    return out
