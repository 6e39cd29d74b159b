"""Acceptance checks, one group per criterion.

Each test carries ``@pytest.mark.criterion(n)``; the summary hook in
``conftest.py`` prints one PASS/FAIL line per criterion at the end of the
run.  Seeds are fixed up front and never tuned to a result.
"""
import math
import time

import numpy as np
import pytest
from scipy import stats

from antichain.analysis import (
    ExactIlhsCdf,
    S_STAR_LIMIT,
    c_star,
    circle_corr_theory,
    correlation_with_se,
    hoeffding_corr_from_cdf,
    ilhs_corr_theory,
    indicator_vrf_argmax_numeric,
    indicator_vrf_normal,
    indicator_vrf_uniform,
    ks_critical,
    ks_distance_bound_check,
    ks_statistic,
    normal_pair_uniform_corr,
    normal_pair_uniform_corr_series,
    pooled_between_cov,
    s_star,
    unit_grid,
    vrf_size_fixed,
)
from antichain.analysis import ilhs_distance_bound
from antichain.antithetic_gen import (
    GeneratorSpec,
    UnitFraction,
    exp_from_uniform,
    pd_fractions,
    pd_raw,
    ru_tuples,
    uniform_tuples,
)
from antichain.chains import (
    MixtureModel,
    PROBIT_ESTIMANDS,
    ProbitModel,
    circle_tau,
    mixture_posterior_cdf,
    probit_starts,
)
from antichain.cli import main
from antichain.coupling_engine import run_cftp_k_processes, run_circle_pair
from antichain.datasets import LUPUS_TABLE
from antichain.experiments import (
    ExperimentConfig,
    arm_stream,
    probit_ensemble_estimates,
    run_experiment,
    run_probit_chains,
)
from antichain.streams import RandomStream

from helpers import within_se

SEED = 20050401
crit = pytest.mark.criterion


# -- 1 -----------------------------------------------------------------------------


@crit(1)
def test_k_alpha_table(capsys):
    t0 = time.perf_counter()
    assert main(["theory", "k-alpha", "--format", "csv"]) == 0
    elapsed = time.perf_counter() - t0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "alpha,k_alpha"
    got = [(float(a), int(k)) for a, k in (l.split(",") for l in lines[1:])]
    assert got == [(0.5, 5), (0.6, 6), (0.7, 7), (0.8, 9), (0.9, 17), (0.95, 32), (0.99, 152)]
    assert elapsed < 1.0


# -- 2 -----------------------------------------------------------------------------


@crit(2)
def test_closed_form_anchors():
    t0 = time.perf_counter()
    assert s_star(3) == 1.0 / 3.0
    assert abs(s_star(10 ** 6) - 1.0 / (3.0 + 2.0 * math.sqrt(2.0))) < 1e-3
    assert abs(S_STAR_LIMIT - 0.17157) < 1e-5
    for k in (3, 5, 7, 20):
        assert abs(indicator_vrf_argmax_numeric(k) - c_star(k)[0]) < 1e-9
    assert time.perf_counter() - t0 < 5.0


# -- 3 -----------------------------------------------------------------------------

TRIANGLE = [(k, t) for k in (2, 3, 5) for t in (1, 2, 3)]


@crit(3)
@pytest.mark.parametrize("k,t", TRIANGLE)
def test_ilhs_exactness_triangle(k, t):
    theory = ilhs_corr_theory(k, t)
    exact = hoeffding_corr_from_cdf(ExactIlhsCdf(k, t), 401)
    assert abs(exact - theory) < 1e-5
    x = uniform_tuples(GeneratorSpec("ilhs", k, t), RandomStream(SEED, stream_id=300 + 10 * k + t), 10 ** 5)
    r, se = correlation_with_se(x[:, 0], x[:, 1])
    assert within_se(r, theory, se)
    assert within_se(r, exact, se)


# -- 4 -----------------------------------------------------------------------------


def _grid():
    g = unit_grid(401)
    return np.meshgrid(g, g, indexing="ij")


@crit(4)
@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_exact_cdf_monotone_in_t_and_below_product(k):
    U, V = _grid()
    prev = ExactIlhsCdf(k, 0)(U, V)
    assert np.max(np.abs(prev - U * V)) <= 1e-12
    for t in range(1, 8):
        cur = ExactIlhsCdf(k, t)(U, V)
        assert np.max(cur - prev) <= 1e-12
        assert np.max(cur - U * V) <= 1e-12
        prev = cur


@crit(4)
@pytest.mark.parametrize("k,t,m", [(k, t, m) for k in (3, 4) for t in (1, 2, 5) for m in (1, 3)])
def test_exact_cdf_distance_bound(k, t, m):
    rep = ks_distance_bound_check(k, t, m, 401)
    assert rep.d_observed <= ilhs_distance_bound(k, t) + 1e-12


@crit(4)
@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_exact_cdf_diagonal_time_invariant(k):
    c = unit_grid(401)
    base = ExactIlhsCdf(k, 1)(c, c)
    for t in range(2, 8):
        assert np.max(np.abs(ExactIlhsCdf(k, t)(c, c) - base)) <= 1e-12


# -- 5 -----------------------------------------------------------------------------

N5 = 10 ** 5
GEN_SPECS = [GeneratorSpec("pair", 2), GeneratorSpec("pd", 3), GeneratorSpec("normal", 3),
             GeneratorSpec("ilhs", 3), GeneratorSpec("independent", 3)]


@crit(5)
@pytest.mark.parametrize("spec", GEN_SPECS, ids=lambda s: s.label)
def test_generator_marginal_uniformity(spec):
    x = uniform_tuples(spec, RandomStream(SEED, stream_id=500 + GEN_SPECS.index(spec)), N5)
    assert ks_statistic(x[:, 0], lambda v: v) < ks_critical(N5, 0.99)


@crit(5)
def test_generator_marginal_uniformity_pd_raw_and_ru():
    s = RandomStream(SEED, stream_id=510)
    r1 = s.uniform(N5)
    second = np.array([pd_raw(r, 3).values[1] for r in r1])
    assert ks_statistic(second, lambda v: v) < ks_critical(N5, 0.99)
    z = ru_tuples(s, N5, 3)
    assert ks_statistic(stats.norm.cdf(z[:, 0]), lambda v: v) < ks_critical(N5, 0.99)


@crit(5)
@pytest.mark.parametrize("k", [2, 3, 5, 8, 16, 64])
def test_pd_sum_identity_bit_exact(k):
    s = RandomStream(SEED, stream_id=520 + k)
    for _ in range(2000):
        fr = pd_fractions(UnitFraction.random(s), k)
        assert 2 * sum(f.scaled_value() for f in fr) == k << 128


@crit(5)
def test_pd_raw_nqd_violation():
    r1 = RandomStream(SEED, stream_id=530).uniform(N5)
    r2 = np.array([pd_raw(r, 3).values[1] for r in r1])
    a, b = r1 <= 0.9, r2 <= 0.2
    joint = np.mean(a & b)
    product = a.mean() * b.mean()
    se = math.sqrt(joint * (1 - joint) / N5)
    assert abs(joint - 0.2) < 3 * se and abs(product - 0.18) < 0.01
    assert joint - product > 3 * se


@crit(5)
def test_pair_exponential_correlation():
    u = RandomStream(SEED, stream_id=540).uniform(10 ** 6)
    r, se = correlation_with_se(exp_from_uniform(u), exp_from_uniform(1.0 - u))
    assert within_se(r, 1.0 - math.pi ** 2 / 6.0, se)


# -- 6 -----------------------------------------------------------------------------


@crit(6)
@pytest.mark.xfail(strict=True, reason="the printed cubic series departs from the exact arcsine law for |rho| > 0.26")
def test_normal_pair_series_agrees_with_quadrature():
    rhos = np.linspace(-0.5, 0.5, 101)
    err = max(abs(normal_pair_uniform_corr(r) - normal_pair_uniform_corr_series(r)) for r in rhos)
    assert err <= 5e-4


@crit(6)
def test_normal_indicator_vrf_limits():
    assert indicator_vrf_normal(0.0, 2) <= 1e-9
    assert abs(indicator_vrf_normal(0.0, 10 ** 4) - (1.0 - 2.0 / math.pi)) < 1e-3


# -- 7 -----------------------------------------------------------------------------


@crit(7)
@pytest.mark.parametrize("i,tau", list(enumerate([0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8])))
def test_circle_counterexample(i, tau):
    tx, ty = run_circle_pair(tau, 10 ** 5, RandomStream(SEED, stream_id=700 + i))
    r, se = correlation_with_se(np.cos(tx), np.cos(ty))
    # tau = 0 gives exactly opposite cosines, so the SE is zero up to rounding
    assert within_se(r, circle_corr_theory(tau), se, floor=1e-9)
    taus = np.array([circle_tau((tx[j], ty[j])) for j in range(999, 10 ** 5, 1000)])
    assert abs(taus[0] - tau) <= 1e-9
    assert np.max(np.abs(np.diff(taus))) <= 1e-9


# -- 8 -----------------------------------------------------------------------------


@crit(8)
def test_cftp_flat_posterior_uniform():
    res = run_cftp_k_processes(MixtureModel([]), GeneratorSpec("independent", 1), RandomStream(SEED, stream_id=800), 10 ** 4)
    assert ks_statistic(res.draws[:, 0], lambda v: v) < 0.02


@crit(8)
def test_cftp_mixture_matches_posterior(mixture):
    res = run_cftp_k_processes(mixture, GeneratorSpec("independent", 1), RandomStream(SEED, stream_id=801), 10 ** 4)
    assert ks_statistic(res.draws[:, 0], mixture_posterior_cdf(mixture)) < 0.02


# -- 9 -----------------------------------------------------------------------------

KS9 = list(range(2, 11))
SOFT_TARGETS = {"mixture-cftp": "S_2 0.5-0.6, S_k>=6 0.2-0.3", "slice": "S_2 0.35-0.45, S_k>=6 0.10-0.15"}


def _efficacy(cfg, estimands):
    out = run_experiment(cfg)
    rows = {(r["k"], r["estimand"]): r for r in out["rows"] if r["method"] == "ilhs7"}
    print(f"\n{cfg.experiment}: soft targets {SOFT_TARGETS[cfg.experiment]}")
    for name in estimands:
        print(name, " ".join(f"S_{k}={rows[(k, name)]['s_k']:.3f}" for k in KS9))
        for k in KS9:
            r = rows[(k, name)]
            assert r["s_k"] + 3 * r["se"] < 1.0, (k, name)
        s2, s6 = rows[(2, name)], rows[(6, name)]
        assert s6["s_k"] + 3 * math.hypot(s2["se"], s6["se"]) < s2["s_k"], name
        for k in KS9:
            vals = out["trajectories"][(k, "ilhs7")][1][name]
            m = vals.shape[2]
            pc = pooled_between_cov(vals, np.unique(np.linspace(0, m - 1, 5).astype(int)))
            assert pc.max_z() <= 3.0, (k, name)


@crit(9)
def test_mixture_cftp_efficacy():
    cfg = ExperimentConfig("mixture-cftp", ks=KS9, replicates=1000, seed=SEED, estimands=["identity"], timing=False)
    _efficacy(cfg, ["identity"])


@crit(9)
def test_slice_efficacy():
    cfg = ExperimentConfig("slice", ks=KS9, replicates=1000, seed=SEED, budget=2520,
                           estimands=["identity", "indicator:1"], timing=False)
    _efficacy(cfg, ["identity", "indicator:1"])


# -- 10 ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def probit_baseline(probit):
    """100 independent chains of 10**4 kept steps after 5000 burn-in (10**6 draws)."""
    start = probit_starts(probit, "mle")
    betas = run_probit_chains(probit, GeneratorSpec("independent", 1), start, 10 ** 4,
                              RandomStream(SEED, stream_id=0xBA5E), 100, burn_in=5000)
    per_chain = probit_ensemble_estimates(betas[:, 0][:, None])
    return per_chain.mean(axis=0), per_chain.std(axis=0, ddof=1) / math.sqrt(per_chain.shape[0])


def _ensemble(probit, burn_in):
    """30 replicate k = 5 ILHS(7) ensembles of 9000 draws from the MLE start."""
    start = probit_starts(probit, "mle")
    betas = run_probit_chains(probit, GeneratorSpec("ilhs", 5, 7), start, 1800,
                              arm_stream(SEED, "probit", 0, 5), 30, burn_in)
    est = probit_ensemble_estimates(betas)
    return est[0], est.std(axis=0, ddof=1)


def _compare(ens, ens_sd, base, base_se):
    z = (ens - base) / np.sqrt(ens_sd ** 2 + base_se ** 2)
    for name, a, b, zz in zip(PROBIT_ESTIMANDS, ens, base, z):
        print(f"{name}: ensemble {a:.4f} baseline {b:.4f} z {zz:+.2f}")
    return z


@crit(10)
@pytest.mark.xfail(strict=True, reason="no burn-in from the MLE start leaves a start-up bias larger than 3 SEs")
def test_probit_ensemble_matches_baseline(probit, probit_baseline):
    z = _compare(*_ensemble(probit, 0), *probit_baseline)
    assert np.all(np.abs(z) <= 3.0)


@crit(10)
def test_lupus_checksums():
    assert sum(r[2] for r in LUPUS_TABLE) == 18
    assert sum(r[3] for r in LUPUS_TABLE) == 55
    m = ProbitModel.from_table(LUPUS_TABLE)
    assert int(m.y.sum()) == 18 and m.n == 55


def test_probit_ensemble_with_burn_in_matches_baseline(probit, probit_baseline):
    """Not an acceptance criterion: the same comparison after 5000 burn-in steps."""
    z = _compare(*_ensemble(probit, 5000), *probit_baseline)
    assert np.all(np.abs(z) <= 3.0)


# -- 11 ----------------------------------------------------------------------------


@crit(11)
@pytest.mark.parametrize("c,k", [(c, k) for c in (0.3, 0.4, 0.5) for k in (2, 5, 10)])
def test_indicator_vrf_cross_check(c, k):
    x = uniform_tuples(GeneratorSpec("ilhs", k, 7), RandomStream(SEED, stream_id=1100 + k), 10 ** 5)
    rep = vrf_size_fixed((x <= c).astype(np.float64))
    # cells with integer k*c have a constant count below c, so S is exactly 0
    assert within_se(rep.s_k, indicator_vrf_uniform(c, k), rep.se_s, floor=1e-9)
