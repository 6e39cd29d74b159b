"""Reproducible, splittable random streams.

A :class:`RandomStream` is identified by ``(seed, stream_id, path)``.  The
triple is fed to :class:`numpy.random.SeedSequence` as entropy plus spawn
key, and the resulting Philox generator is platform independent, so the
same identity always produces the same sequence.  ``child(i)`` derives an
independent sub-stream without touching the parent's state.
"""
from __future__ import annotations

import numpy as np

_TWO53 = 2.0 ** -53
_MASK64 = (1 << 64) - 1


class RandomStream:
    """Seeded source of i.i.d. variates with an explicit draw counter."""

    def __init__(self, seed: int, stream_id: int = 0, path: tuple[int, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.path = tuple(int(p) & _MASK64 for p in path)
        ss = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id,) + self.path
        )
        self._gen = np.random.Generator(np.random.Philox(ss))
        self.counter = 0

    def __repr__(self) -> str:
        return (
            f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, "
            f"path={self.path}, counter={self.counter})"
        )

    def child(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id, self.path + (index,))

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniforms on the open interval (0, 1), on the 2**-53 midpoint grid."""
        bits = self._gen.integers(0, 1 << 53, size=size, dtype=np.int64)
        self.counter += int(np.size(bits))
        out = (bits + 0.5) * _TWO53
        return float(out) if size is None else out

    def normal(self, size=None) -> np.ndarray | float:
        out = self._gen.standard_normal(size)
        self.counter += int(np.size(out))
        return float(out) if size is None else out

    def uint64(self, size=None) -> np.ndarray | int:
        out = self._gen.integers(0, _MASK64, size=size, dtype=np.uint64, endpoint=True)
        self.counter += int(np.size(out))
        return int(out) if size is None else out

    def chi(self, df: int, size=None) -> np.ndarray | float:
        z = self.normal((df,) if size is None else (*np.atleast_1d(size), df))
        out = np.sqrt(np.sum(z * z, axis=-1))
        return float(out) if size is None else out


def sample_permutation(stream: RandomStream, k: int) -> np.ndarray:
    """Uniform random permutation of ``0..k-1`` by Fisher-Yates."""
    return sample_permutations(stream, 1, k)[0]


def sample_permutations(stream: RandomStream, n: int, k: int) -> np.ndarray:
    """``n`` independent uniform permutations of ``0..k-1``, shape ``(n, k)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return np.zeros((n, 1), dtype=np.int64)
    u = stream.uniform((n, k - 1))
    return fisher_yates(u)


def fisher_yates(u: np.ndarray) -> np.ndarray:
    """Row-wise Fisher-Yates driven by uniforms ``u`` of shape ``(n, k-1)``.

    Step ``s`` swaps position ``k-1-s`` with a position drawn uniformly from
    ``0..k-1-s`` using ``u[:, s]``.
    """
    n, km1 = u.shape
    k = km1 + 1
    perm = np.tile(np.arange(k, dtype=np.int64), (n, 1))
    rows = np.arange(n)
    for s in range(km1):
        last = k - 1 - s
        j = np.minimum((u[:, s] * (last + 1)).astype(np.int64), last)
        tmp = perm[rows, j].copy()
        perm[rows, j] = perm[:, last]
        perm[:, last] = tmp
    return perm
