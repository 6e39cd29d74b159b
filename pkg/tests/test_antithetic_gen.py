import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from antichain.analysis import ilhs_corr_theory, ks_critical, ks_statistic, normal_pair_uniform_corr, vrf_size_fixed
from antichain.antithetic_gen import (
    PD_MAX_K,
    AntitheticTuple,
    CapabilityError,
    GeneratorSpec,
    NormalTuple,
    UnitFraction,
    exp_from_uniform,
    gaussian_to_uniform,
    ilhs_step,
    ilhs_tuple,
    normal_na_tuple,
    normal_na_tuples,
    pair_antithetic,
    pd_fixed_batch,
    pd_fractions,
    pd_permuted,
    pd_raw,
    ru_tuple,
    ru_tuples,
    std_normal_cdf,
    std_normal_quantile,
    uniform_tuples,
)
from antichain.streams import RandomStream

from helpers import within_se

N = 100000


def pooled_corr(vals):
    """Pooled pairwise correlation and its jackknife SE."""
    rep = vrf_size_fixed(vals)
    return rep.rho_hat, rep.se_s / (vals.shape[1] - 1)


# -- spec validation -----------------------------------------------------------


@pytest.mark.parametrize(
    "method,k,T",
    [("pair", 3, 7), ("pd", 65, 7), ("ilhs", 3, 0), ("normal", 1, 7), ("bogus", 2, 7)],
)
def test_invalid_specs_rejected(method, k, T):
    with pytest.raises(ValueError):
        GeneratorSpec(method, k, T)


def test_pd_cap_is_capability_error():
    with pytest.raises(CapabilityError):
        GeneratorSpec("pd", PD_MAX_K + 1)
    with pytest.raises(CapabilityError):
        pd_raw(0.25, PD_MAX_K + 1)


# -- pair ------------------------------------------------------------------------


def test_pair_values():
    assert pair_antithetic(0.3).values == (0.3, 1.0 - 0.3)
    assert pair_antithetic(0.5).values == (0.5, 0.5)
    assert pair_antithetic(0.3).exchangeable is False


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_pair_domain(u):
    with pytest.raises(ValueError):
        pair_antithetic(u)


# -- permuted displacement ---------------------------------------------------------


def test_pd_raw_hand_values():
    assert pd_raw(0.25, 3).values == (0.25, 0.75, 0.5)
    assert pd_raw(0.25, 4).values == (0.25, 0.75, 0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 53 - 1))
def test_pd_raw_k2_is_pair(i):
    # fixed point holds 128 fractional bits, so use seeds on the 2**-53 grid
    r = i * 2.0 ** -53
    assert pd_raw(r, 2).values == (r, 1.0 - r)


def test_unit_fraction_exact_ops():
    half = UnitFraction.from_float(0.5)
    assert half.plus_half_mod1() == UnitFraction(0)
    assert UnitFraction.from_float(0.75).scaled_mod1(1) == half
    one = UnitFraction.from_float(1.0)
    assert float(one) == 1.0 and one.complement() == UnitFraction(0)
    assert UnitFraction(0).complement() == one
    with pytest.raises(ValueError):
        UnitFraction.from_float(1.5)


@pytest.mark.parametrize("k", range(2, 17))
def test_pd_sum_exact_fixed_point(k):
    stream = RandomStream(k, 99)
    for _ in range(10000 // 15):
        fr = pd_fractions(UnitFraction.random(stream), k)
        assert sum(f.scaled_value() for f in fr) * 2 == k * 2 ** 128


@pytest.mark.parametrize("k", [2, 3, 5, 16, 64])
def test_pd_batch_sum_exact(k):
    s = RandomStream(5, k)
    hi, lo, one = pd_fixed_batch(s.uint64(10000), s.uint64(10000), k)
    total = [
        sum((int(h) << 64 | int(l)) if not o else 1 << 128 for h, l, o in zip(hr, lr, orow))
        for hr, lr, orow in zip(hi[:200], lo[:200], one[:200])
    ]
    assert all(t * 2 == k << 128 for t in total)


def test_pd_batch_matches_scalar():
    s = RandomStream(17)
    h, l = s.uint64(50), s.uint64(50)
    bh, bl, bo = pd_fixed_batch(h, l, 7)
    for i in range(50):
        fr = pd_fractions(UnitFraction((int(h[i]) << 64) | int(l[i])), 7)
        assert [f.scaled_value() for f in fr] == [
            (1 << 128) if bo[i, j] else (int(bh[i, j]) << 64 | int(bl[i, j])) for j in range(7)
        ]


def test_pd_permuted_properties(stream):
    t = pd_permuted(stream, 5)
    assert t.exchangeable and t.k == 5
    vals = uniform_tuples(GeneratorSpec("pd", 3), stream, N)
    r, se = pooled_corr(vals)
    assert within_se(r, -0.5, se)


def test_pd_raw_nqd_violation_exact():
    # r2 <= 0.2 exactly when r1 lies in [0.5, 0.7], all of which are <= 0.9
    r1 = np.linspace(0.0, 1.0, 100001)[:-1]
    r2 = np.array([pd_raw(x, 3).values[1] for x in r1[::50]])
    joint = np.mean((r1[::50] <= 0.9) & (r2 <= 0.2))
    assert abs(joint - 0.2) < 1e-3
    assert joint > 0.9 * 0.2 + 0.01


# -- permutations --------------------------------------------------------------------


def test_permutation_positions_uniform_k4():
    from antichain.streams import sample_permutations

    perms = sample_permutations(RandomStream(21), N, 4)
    table = np.array([[np.sum(perms[:, pos] == v) for v in range(4)] for pos in range(4)])
    chi2 = stats.chi2_contingency(table)[1]
    assert chi2 > 0.001


def test_permutation_k1():
    from antichain.streams import sample_permutation

    assert sample_permutation(RandomStream(0), 1).tolist() == [0]


# -- normal ---------------------------------------------------------------------------


def test_normal_k2_antipodal(stream):
    z = normal_na_tuple(stream, 2)
    assert z.values[0] == -z.values[1]


def test_normal_sum_zero_and_moments(stream):
    z = normal_na_tuples(stream, N, 5)
    assert np.max(np.abs(z.sum(axis=1))) <= 1e-12 * 5
    r, se = pooled_corr(z)
    assert within_se(r, -0.25, se)
    v = z[:, 0]
    assert within_se(v.var(), 1.0, np.sqrt(2.0 / N))


def test_gaussian_to_uniform(stream):
    assert gaussian_to_uniform(NormalTuple((0.0, 0.0))).values == (0.5, 0.5)
    with pytest.raises(ValueError):
        gaussian_to_uniform(NormalTuple((np.inf, -np.inf)))
    u = std_normal_cdf(normal_na_tuples(stream, N, 2))
    assert np.corrcoef(u.T)[0, 1] < -0.999999
    u3 = std_normal_cdf(normal_na_tuples(stream, N, 3))
    r, se = pooled_corr(u3)
    assert within_se(r, normal_pair_uniform_corr(-0.5), se)


@pytest.mark.parametrize("k", [3, 5])
def test_normal_method_strictly_above_floor(k):
    u = uniform_tuples(GeneratorSpec("normal", k), RandomStream(k, 31), N)
    r, se = pooled_corr(u)
    assert r > -1.0 / (k - 1) + 3 * se


# -- ILHS -----------------------------------------------------------------------------


def test_ilhs_step_examples():
    spec = GeneratorSpec("ilhs", 2, 1)
    assert ilhs_step(AntitheticTuple((0.5, 0.5), spec, True), [0, 1]).values == (0.25, 0.75)
    spec3 = GeneratorSpec("ilhs", 3, 1)
    out = ilhs_step(AntitheticTuple((0.0, 0.0, 0.0), spec3, True), [2, 0, 1]).values
    assert out == (2 / 3, 0.0, 1 / 3)
    with pytest.raises(ValueError):
        ilhs_step(AntitheticTuple((0.0, 0.0), spec, True), [0, 1, 2])
    with pytest.raises(ValueError):
        ilhs_step(AntitheticTuple((0.0, 0.0), spec, True), [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0, exclude_max=True), min_size=2, max_size=8), st.randoms())
def test_ilhs_step_cells(vals, rnd):
    k = len(vals)
    perm = list(range(k))
    rnd.shuffle(perm)
    out = ilhs_step(AntitheticTuple(tuple(vals), GeneratorSpec("ilhs", k, 1), True), perm).values
    for o, p in zip(out, perm):
        assert p / k <= o < (p + 1) / k or (o == (p + 1) / k and vals[perm.index(p)] > 1 - 1e-15)


def test_ilhs_t1_one_value_per_stratum(stream):
    vals = uniform_tuples(GeneratorSpec("ilhs", 5, 1), stream, 1000)
    strata = np.sort(np.floor(vals * 5), axis=1)
    assert np.all(strata == np.arange(5))


def test_ilhs_tuple_object(stream):
    t = ilhs_tuple(stream, 4, 3)
    assert t.k == 4 and t.exchangeable and t.spec.T == 3


@pytest.mark.parametrize("k", [2, 3, 5, 10])
@pytest.mark.parametrize("T", [1, 3, 7])
def test_ilhs_corr_matches_theory(k, T):
    vals = uniform_tuples(GeneratorSpec("ilhs", k, T), RandomStream(k * 100 + T), N)
    r, se = pooled_corr(vals)
    assert within_se(r, ilhs_corr_theory(k, T), se, floor=1e-9)


# -- marginals, exchangeability, correlation floor -------------------------------------


ALL_SPECS = [GeneratorSpec("pair", 2)] + [
    GeneratorSpec(m, k) for m in ("pd", "normal", "ilhs", "independent") for k in (2, 3, 5, 10)
]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: f"{s.label}-{s.k}")
def test_marginal_uniformity_and_floor(spec):
    vals = uniform_tuples(spec, RandomStream(spec.k, 404), N)
    # Bonferroni over the k coordinates keeps the family at the 99% level
    crit = ks_critical(N, 1.0 - 0.01 / spec.k)
    for j in range(spec.k):
        assert ks_statistic(vals[:, j], lambda x: x) < crit
    r, se = pooled_corr(vals)
    assert r >= -1.0 / (spec.k - 1) - 3 * max(se, 1e-9)


@pytest.mark.parametrize("spec", [GeneratorSpec("pd", 5), GeneratorSpec("ilhs", 5)], ids=["pd", "ilhs"])
def test_exchangeable_coordinates(spec):
    vals = uniform_tuples(spec, RandomStream(3, 505), N)
    crit = 1.63 * np.sqrt(2.0 / N)
    for j in range(1, spec.k):
        assert ks_statistic(vals[:, 0], other=vals[:, j]) < crit


@pytest.mark.parametrize("spec", [GeneratorSpec("pair", 2), GeneratorSpec("pd", 3), GeneratorSpec("ilhs", 3)], ids=["pair", "pd", "ilhs"])
def test_pairwise_nqd_spot_check(spec):
    from antichain.analysis import nlod_nuod_check

    vals = uniform_tuples(spec, RandomStream(8, 606), N)
    grid = np.linspace(0.0, 1.0, 11)[1:-1]
    diag = nlod_nuod_check(vals[:, :2], grid)
    assert diag.max_lower_z <= 3.0


# -- RU tuples ------------------------------------------------------------------------


def test_ru_shared_q_zero_sum_and_corr(stream):
    x = ru_tuples(stream, N, 4, shared_q=True)
    assert np.max(np.abs(x.sum(axis=1))) < 1e-12
    r, se = pooled_corr(x)
    assert within_se(r, -1.0 / 3.0, se)
    assert ks_statistic(x[:, 0], stats.norm.cdf) < ks_critical(N)


def test_ru_independent_q_corr(stream):
    eq = 2.0 * math.sqrt(2.0 / math.pi)
    cv2 = (3.0 - eq * eq) / (eq * eq)
    assert abs(cv2 - (3 * math.pi / 8 - 1)) < 1e-12
    target = -1.0 / (1.0 + cv2)
    x = ru_tuples(stream, N, 2, shared_q=False)
    r, se = pooled_corr(x)
    assert within_se(r, target, se)
    assert ks_statistic(x[:, 1], stats.norm.cdf) < ks_critical(N)


def test_ru_single(stream):
    assert len(ru_tuple(stream, 3)) == 3


# -- scalar transforms ----------------------------------------------------------------


def test_normal_kernels():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_quantile(0.75) - 0.6744897501960817) < 1e-12
    x = np.linspace(-8, 8, 1001)
    assert np.max(np.abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0)) <= 1e-14
    p = np.concatenate([np.logspace(-15, -1, 50), np.linspace(0.1, 0.9, 50), 1 - np.logspace(-15, -1, 50)])
    assert np.max(np.abs(std_normal_cdf(std_normal_quantile(p)) - p)) <= 1e-12
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            std_normal_quantile(bad)


def test_exp_from_uniform():
    assert abs(exp_from_uniform(1 - math.exp(-1)) - 1.0) < 1e-15
    assert 0 < exp_from_uniform(1e-300) < 1e-299
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            exp_from_uniform(bad)
    u = np.sort(RandomStream(2).uniform(1000))
    assert np.all(np.diff(exp_from_uniform(u)) >= 0)
    e = exp_from_uniform(RandomStream(4).uniform(10 ** 6))
    assert within_se(e.mean(), 1.0, e.std() / 1000)


def test_pair_exponential_correlation(stream):
    u = stream.uniform(10 ** 6)
    x, y = exp_from_uniform(u), exp_from_uniform(1 - u)
    from antichain.analysis import correlation_with_se

    r, se = correlation_with_se(x, y)
    assert within_se(r, 1 - math.pi ** 2 / 6, se)


def test_determinism_of_batched_generators():
    for spec in ALL_SPECS:
        a = uniform_tuples(spec, RandomStream(1, 2), 100)
        b = uniform_tuples(spec, RandomStream(1, 2), 100)
        assert np.array_equal(a, b)
