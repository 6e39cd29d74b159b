import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from antichain.streams import RandomStream, fisher_yates, sample_permutation, sample_permutations


def test_same_identity_reproduces_sequence():
    a = RandomStream(1, 2, (3,)).uniform(100)
    b = RandomStream(1, 2, (3,)).uniform(100)
    assert np.array_equal(a, b)


def test_distinct_identities_differ():
    base = RandomStream(1).uniform(50)
    assert not np.array_equal(base, RandomStream(2).uniform(50))
    assert not np.array_equal(base, RandomStream(1, 1).uniform(50))
    assert not np.array_equal(base, RandomStream(1).child(0).uniform(50))


def test_child_does_not_consume_parent():
    s = RandomStream(9)
    s.child(4).uniform(10)
    assert np.array_equal(s.uniform(5), RandomStream(9).uniform(5))


def test_counter_tracks_draws():
    s = RandomStream(0)
    s.uniform(7)
    s.normal((2, 3))
    s.uint64(4)
    assert s.counter == 17


def test_uniform_open_interval_and_grid():
    u = RandomStream(3).uniform(200000)
    assert u.min() > 0.0 and u.max() < 1.0
    frac = u * 2.0 ** 53 - 0.5
    assert np.array_equal(frac, np.floor(frac))


def test_scalar_draws_are_python_floats():
    s = RandomStream(5)
    assert isinstance(s.uniform(), float)
    assert isinstance(s.normal(), float)
    assert isinstance(s.uint64(), int)


def test_chi_three_moments():
    q = RandomStream(8).chi(3, 200000)
    assert abs(q.mean() - 2.0 * np.sqrt(2.0 / np.pi)) < 0.01
    assert abs(np.mean(q * q) - 3.0) < 0.03


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2 ** 32))
def test_sample_permutation_is_permutation(k, seed):
    perm = sample_permutation(RandomStream(seed), k)
    assert sorted(perm.tolist()) == list(range(k))


def test_fisher_yates_handles_uniforms_near_one():
    u = np.full((1, 4), np.nextafter(1.0, 0.0))
    assert sorted(fisher_yates(u)[0].tolist()) == [0, 1, 2, 3, 4]


def test_permutations_are_uniform_for_k3():
    perms = sample_permutations(RandomStream(11), 60000, 3)
    codes = perms[:, 0] * 9 + perms[:, 1] * 3 + perms[:, 2]
    _, counts = np.unique(codes, return_counts=True)
    assert counts.size == 6
    expected = 10000.0
    chi2 = np.sum((counts - expected) ** 2 / expected)
    assert chi2 < 20.5  # 99.9% point of chi-square with 5 df


def test_permutation_rejects_bad_k():
    with pytest.raises(ValueError):
        sample_permutations(RandomStream(0), 3, 0)
