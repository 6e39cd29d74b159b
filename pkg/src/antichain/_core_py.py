"""Pure numpy implementations of the hot kernels.

These define the reference semantics; ``_core.pyx`` must agree bit for bit.
Floating-point operations are kept in the same order in both.
"""
import numpy as np

from .streams import fisher_yates


def ilhs_iterate(start, swaps):
    """Apply ``T`` Latin-hypercube refinements to each row of ``start``.

    ``start`` has shape ``(n, k)``; ``swaps`` has shape ``(n, T, k-1)`` and
    holds the Fisher-Yates uniforms for the permutation of each step.
    """
    values = np.array(start, dtype=np.float64, copy=True)
    n, k = values.shape
    steps = swaps.shape[1]
    for s in range(steps):
        perm = fisher_yates(np.ascontiguousarray(swaps[:, s, :]))
        values = (perm + values) / k
    return values


def ilhs_cdf(u, v, k, t):
    """Exact joint CDF of an ILHS pair after ``t`` steps, elementwise."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    return _ilhs_cdf_sorted(lo, hi, int(k), int(t))


def _ilhs_cdf_sorted(u, v, k, t):
    if t == 0:
        return u * v
    denom = float(k * (k - 1))
    ku = k * u
    kv = k * v
    i = np.floor(ku)
    j = np.floor(kv)
    fu = ku - i
    fv = kv - j
    out = np.zeros_like(u)
    same = (j > 0) & (j == i)
    out[same] = (ku[same] * (kv[same] - 1.0) - fu[same] * (fv[same] - 1.0)) / denom
    apart = j > i
    if np.any(apart):
        a, b = fu[apart], fv[apart]
        inner = _ilhs_cdf_sorted(np.minimum(a, b), np.maximum(a, b), k, t - 1)
        out[apart] = (ku[apart] * (kv[apart] - 1.0) - a * b + inner) / denom
    return out


def cftp_mixture_window(ratio, u_blocks, cumw):
    """Run the bottom (p=0) and top (p=1) chains through a block window.

    ``ratio[i] = f1(x_i) / f0(x_i)``; row ``r`` of ``u_blocks``/``cumw`` is the
    randomness of time ``-T + r``.  ``cumw`` holds running sums of the
    exponential weights.  Returns ``(p_bottom, p_top, m_bottom, m_top,
    z_equal)`` after the last row.
    """
    p_lo, p_hi = 0.0, 1.0
    m_lo = m_hi = 0
    z_equal = True
    n = ratio.shape[0]
    for r in range(u_blocks.shape[0]):
        u = u_blocks[r]
        z_lo = _indicators(p_lo, ratio, u)
        z_hi = _indicators(p_hi, ratio, u)
        m_lo = n - int(z_lo.sum())
        m_hi = n - int(z_hi.sum())
        p_lo = cumw[r, m_lo] / cumw[r, n + 1]
        p_hi = cumw[r, m_hi] / cumw[r, n + 1]
        z_equal = bool(np.array_equal(z_lo, z_hi))
    return p_lo, p_hi, m_lo, m_hi, z_equal


def _indicators(p, ratio, u):
    if p >= 1.0:
        return np.zeros(ratio.shape[0], dtype=np.int8)
    if p <= 0.0:
        return np.ones(ratio.shape[0], dtype=np.int8)
    thr = p / (p + (1.0 - p) * ratio)
    return (u > thr).astype(np.int8)
