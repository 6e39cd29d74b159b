"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
reference in ``_core_py`` is used.  Set ``ANTICHAIN_PURE_PYTHON=1`` to force
the fallback.  Both backends produce bit-identical results.
"""
import os

from . import _core_py

if os.environ.get("ANTICHAIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _core_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _core_py
        BACKEND = "python"

ilhs_iterate = _impl.ilhs_iterate
ilhs_cdf = _impl.ilhs_cdf
cftp_mixture_window = _impl.cftp_mixture_window


def backends():
    """Mapping of available backend name to kernel module."""
    out = {"python": _core_py}
    try:
        from . import _core

        out["cython"] = _core
    except ImportError:
        pass
    return out
