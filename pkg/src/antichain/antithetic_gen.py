"""Generators of negatively associated k-tuples.

Four coupling methods are provided, all producing ``k`` variates with
identical Uniform(0, 1) margins:

``pair``
    the classical ``(u, 1 - u)`` quantile pair (``k = 2`` only);
``pd``
    permuted displacement, a dyadic shift construction computed in exact
    128-bit fixed point so the tuple always sums to ``k / 2``;
``normal``
    ``Phi`` applied to exchangeable normals with correlation ``-1/(k-1)``;
``ilhs``
    iterated Latin hypercube sampling with ``T`` refinement steps.

``independent`` is a control mode returning i.i.d. uniforms.  Every
generator takes an explicit :class:`~antichain.streams.RandomStream`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _kernels
from .streams import RandomStream, sample_permutation, sample_permutations

__all__ = [
    "METHODS",
    "GeneratorSpec",
    "AntitheticTuple",
    "NormalTuple",
    "UnitFraction",
    "pair_antithetic",
    "pd_raw",
    "pd_permuted",
    "sample_permutation",
    "normal_na_tuple",
    "gaussian_to_uniform",
    "ilhs_step",
    "ilhs_tuple",
    "ru_tuple",
    "std_normal_cdf",
    "std_normal_quantile",
    "exp_from_uniform",
    "uniform_tuples",
    "normal_na_tuples",
    "pd_fixed_batch",
    "ru_tuples",
]

METHODS = ("pair", "pd", "normal", "ilhs", "independent")
PD_MAX_K = 64
DEFAULT_ILHS_STEPS = 7

_FRAC_BITS = 128
_ONE = 1 << _FRAC_BITS
_HALF = 1 << (_FRAC_BITS - 1)
_MASK = _ONE - 1


class CapabilityError(ValueError):
    """Requested size exceeds what the fixed-point representation supports."""


@dataclass(frozen=True)
class GeneratorSpec:
    method: str
    k: int
    T: int = DEFAULT_ILHS_STEPS

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.method != "independent" and self.k < 2:
            raise ValueError(f"{self.method} requires k >= 2")
        if self.method == "pair" and self.k != 2:
            raise ValueError("pair requires k = 2")
        if self.method == "pd" and self.k > PD_MAX_K:
            raise CapabilityError(f"pd supports k <= {PD_MAX_K}")
        if self.method == "ilhs" and self.T < 1:
            raise ValueError("ilhs requires T >= 1")

    @property
    def label(self) -> str:
        return f"ilhs{self.T}" if self.method == "ilhs" else self.method


@dataclass(frozen=True)
class AntitheticTuple:
    values: tuple
    spec: GeneratorSpec
    exchangeable: bool

    @property
    def k(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class NormalTuple:
    values: tuple
    k: int = field(default=0)

    def __post_init__(self):
        if self.k == 0:
            object.__setattr__(self, "k", len(self.values))


class UnitFraction:
    """A value in [0, 1] stored as ``numerator / 2**128``.

    The value exactly 1 is represented by ``is_one``.  Doubling modulo 1,
    the half shift and the complement are exact.
    """

    __slots__ = ("numerator", "is_one")

    def __init__(self, numerator: int, is_one: bool = False):
        if is_one:
            numerator = 0
        if not 0 <= numerator < _ONE:
            raise ValueError("numerator out of range")
        self.numerator = int(numerator)
        self.is_one = bool(is_one)

    @classmethod
    def from_float(cls, x: float) -> "UnitFraction":
        if not 0.0 <= x <= 1.0:
            raise ValueError("x must lie in [0, 1]")
        if x == 1.0:
            return cls(0, is_one=True)
        return cls(int(x * 2.0 ** _FRAC_BITS))

    @classmethod
    def random(cls, stream: RandomStream) -> "UnitFraction":
        hi, lo = (int(w) for w in stream.uint64(2))
        return cls((hi << 64) | lo)

    def scaled_mod1(self, power: int) -> "UnitFraction":
        """Fractional part of ``2**power * self``."""
        if self.is_one:
            return UnitFraction(0)
        return UnitFraction((self.numerator << power) & _MASK)

    def plus_half_mod1(self) -> "UnitFraction":
        if self.is_one:
            return UnitFraction(_HALF)
        return UnitFraction((self.numerator + _HALF) & _MASK)

    def complement(self) -> "UnitFraction":
        if self.is_one:
            return UnitFraction(0)
        if self.numerator == 0:
            return UnitFraction(0, is_one=True)
        return UnitFraction(_ONE - self.numerator)

    def scaled_value(self) -> int:
        """The value times ``2**128`` as an exact integer."""
        return _ONE if self.is_one else self.numerator

    def __float__(self) -> float:
        return 1.0 if self.is_one else self.numerator / 2.0 ** _FRAC_BITS

    def __eq__(self, other) -> bool:
        if not isinstance(other, UnitFraction):
            return NotImplemented
        return self.scaled_value() == other.scaled_value()

    def __hash__(self) -> int:
        return hash(self.scaled_value())

    def __repr__(self) -> str:
        return f"UnitFraction({float(self)!r})"


# -- normal and exponential transforms ---------------------------------------


def std_normal_cdf(x):
    """Standard normal CDF (erfc based, accurate in both tails)."""
    return special.ndtr(x)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    arr = np.asarray(p, dtype=np.float64)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise ValueError("quantile requires 0 < p < 1")
    return special.ndtri(p)


def exp_from_uniform(u):
    """Exponential(1) variate by inversion, ``-log(1 - u)``."""
    arr = np.asarray(u, dtype=np.float64)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise ValueError("exp_from_uniform requires 0 < u < 1")
    return -np.log1p(-arr) if arr.ndim else float(-np.log1p(-arr))


# -- single-tuple generators --------------------------------------------------


def pair_antithetic(u: float) -> AntitheticTuple:
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    return AntitheticTuple((u, 1.0 - u), GeneratorSpec("pair", 2), exchangeable=False)


def pd_fractions(r1: UnitFraction, k: int) -> list[UnitFraction]:
    """Exact displacement tuple ``r_1..r_k`` in fixed point."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > PD_MAX_K:
        raise CapabilityError(f"pd supports k <= {PD_MAX_K}")
    out = [r1]
    for i in range(2, k):
        out.append(r1.scaled_mod1(i - 2).plus_half_mod1())
    if k == 2:
        out.append(r1.complement())
    else:
        out.append(r1.scaled_mod1(k - 2).complement())
    return out


def pd_raw(r1, k: int) -> AntitheticTuple:
    """Unpermuted displacement tuple from a seed fraction ``r1``."""
    if not isinstance(r1, UnitFraction):
        r1 = UnitFraction.from_float(float(r1))
    fracs = pd_fractions(r1, k)
    return AntitheticTuple(
        tuple(float(f) for f in fracs), GeneratorSpec("pd", k), exchangeable=False
    )


def pd_permuted(stream: RandomStream, k: int) -> AntitheticTuple:
    fracs = pd_fractions(UnitFraction.random(stream), k)
    perm = sample_permutation(stream, k)
    return AntitheticTuple(
        tuple(float(fracs[j]) for j in perm), GeneratorSpec("pd", k), exchangeable=True
    )


def normal_na_tuple(stream: RandomStream, k: int) -> NormalTuple:
    z = normal_na_tuples(stream, 1, k)[0]
    return NormalTuple(tuple(float(x) for x in z), k)


def gaussian_to_uniform(z: NormalTuple) -> AntitheticTuple:
    arr = np.asarray(z.values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite normal input")
    u = std_normal_cdf(arr)
    return AntitheticTuple(
        tuple(float(x) for x in u), GeneratorSpec("normal", len(arr)), exchangeable=True
    )


def ilhs_step(tup: AntitheticTuple, perm) -> AntitheticTuple:
    """One Latin hypercube refinement: ``value_i <- (perm_i + value_i) / k``."""
    perm = np.asarray(perm, dtype=np.int64)
    k = len(tup.values)
    if perm.shape != (k,):
        raise ValueError("permutation length does not match tuple length")
    if sorted(perm.tolist()) != list(range(k)):
        raise ValueError("perm is not a permutation of 0..k-1")
    vals = (perm + np.asarray(tup.values, dtype=np.float64)) / k
    return AntitheticTuple(tuple(float(v) for v in vals), tup.spec, tup.exchangeable)


def ilhs_tuple(stream: RandomStream, k: int, T: int = DEFAULT_ILHS_STEPS) -> AntitheticTuple:
    vals = uniform_tuples(GeneratorSpec("ilhs", k, T), stream, 1)[0]
    return AntitheticTuple(tuple(float(v) for v in vals), GeneratorSpec("ilhs", k, T), True)


def ru_tuple(stream: RandomStream, k: int, shared_q: bool = True) -> tuple:
    """Normal-margin tuple ``X_i = Q * V_i`` with ``sum(V) = 0``.

    ``Q`` follows the chi distribution with 3 degrees of freedom (density
    ``2 x**2 phi(x)`` on ``x >= 0``) and ``V_i = 2 U_i - 1`` with ``U`` from
    permuted displacement.  A shared ``Q`` gives an exactly zero-sum tuple;
    independent ``Q_i`` trade that for negative association.
    """
    return tuple(float(x) for x in ru_tuples(stream, 1, k, shared_q)[0])


# -- batched generators -------------------------------------------------------


def uniform_tuples(spec: GeneratorSpec, stream: RandomStream, n: int) -> np.ndarray:
    """``n`` independent k-tuples from ``spec``, shape ``(n, k)``."""
    k = spec.k
    if spec.method == "independent":
        return stream.uniform((n, k))
    if spec.method == "pair":
        u = stream.uniform(n)
        return np.column_stack([u, 1.0 - u])
    if spec.method == "pd":
        hi, lo = stream.uint64(n), stream.uint64(n)
        fixed = pd_fixed_batch(hi, lo, k)
        perm = sample_permutations(stream, n, k)
        vals = _fixed_to_float(*fixed)
        return np.take_along_axis(vals, perm, axis=1)
    if spec.method == "normal":
        return std_normal_cdf(normal_na_tuples(stream, n, k))
    if spec.method == "ilhs":
        start = stream.uniform((n, k))
        swaps = stream.uniform((n, spec.T, k - 1))
        return _kernels.ilhs_iterate(start, swaps)
    raise ValueError(spec.method)


def normal_na_tuples(stream: RandomStream, n: int, k: int) -> np.ndarray:
    """Exchangeable N(0, 1) k-tuples with pairwise correlation ``-1/(k-1)``.

    Built by centring i.i.d. normals and rescaling by ``sqrt(k/(k-1))``; the
    law equals the conditional-on-zero-sum construction and every row sums
    to zero up to rounding.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    e = stream.normal((n, k))
    if k == 2:
        # same formula, written so the pair is exactly antipodal
        d = (e[:, 0] - e[:, 1]) / np.sqrt(2.0)
        return np.column_stack([d, -d])
    centred = e - e.mean(axis=1, keepdims=True)
    return centred * np.sqrt(k / (k - 1.0))


_U64 = np.uint64


def _shift_left(hi, lo, s):
    """``(hi, lo) << s`` modulo 2**128 for a Python int ``0 <= s < 128``."""
    if s == 0:
        return hi.copy(), lo.copy()
    if s >= 64:
        return lo << _U64(s - 64), np.zeros_like(lo)
    return (hi << _U64(s)) | (lo >> _U64(64 - s)), lo << _U64(s)


def pd_fixed_batch(hi, lo, k: int):
    """Vectorised displacement tuples in two-word fixed point.

    Returns ``(hi, lo, one)`` arrays of shape ``(n, k)``; ``one`` flags the
    closed endpoint value 1.
    """
    if k > PD_MAX_K:
        raise CapabilityError(f"pd supports k <= {PD_MAX_K}")
    hi = np.asarray(hi, dtype=np.uint64)
    lo = np.asarray(lo, dtype=np.uint64)
    n = hi.shape[0]
    out_hi = np.empty((n, k), dtype=np.uint64)
    out_lo = np.empty((n, k), dtype=np.uint64)
    one = np.zeros((n, k), dtype=bool)
    out_hi[:, 0], out_lo[:, 0] = hi, lo
    top = _U64(1 << 63)
    for i in range(2, k):
        h, l = _shift_left(hi, lo, i - 2)
        out_hi[:, i - 1], out_lo[:, i - 1] = h ^ top, l
    h, l = _shift_left(hi, lo, max(k - 2, 0))
    zero = (h == 0) & (l == 0)
    with np.errstate(over="ignore"):
        cl = ~l + _U64(1)
        ch = ~h + (l == 0).astype(np.uint64)
    cl[zero] = 0
    ch[zero] = 0
    out_hi[:, k - 1], out_lo[:, k - 1] = ch, cl
    one[:, k - 1] = zero
    return out_hi, out_lo, one


def _fixed_to_float(hi, lo, one):
    vals = hi.astype(np.float64) * 2.0 ** -64 + lo.astype(np.float64) * 2.0 ** -128
    vals[one] = 1.0
    return vals


def ru_tuples(stream: RandomStream, n: int, k: int, shared_q: bool = True) -> np.ndarray:
    """Batched :func:`ru_tuple`, shape ``(n, k)``."""
    v = 2.0 * uniform_tuples(GeneratorSpec("pd", k), stream, n) - 1.0
    if shared_q:
        q = stream.chi(3, n)[:, None]
    else:
        q = stream.chi(3, (n, k))
    return q * v
