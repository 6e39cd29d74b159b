"""Compare the compiled and pure numpy kernel backends.

Run with ``python benchmarks/bench_core.py``.  Each kernel is timed on the
same inputs under both backends (median of several repeats); outputs are
checked for bit equality before timing.
"""
import argparse
import time

import numpy as np

from antichain._kernels import backends
from antichain.antithetic_gen import exp_from_uniform
from antichain.chains import synthetic_mixture
from antichain.streams import RandomStream


def median_seconds(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def cases(scale):
    s = RandomStream(1)
    n = 20000 * scale
    start = s.uniform((n, 5))
    swaps = s.uniform((n, 7, 4))
    yield "ilhs_iterate n=%d k=5 T=7" % n, lambda m: m.ilhs_iterate(start, swaps)

    g = np.linspace(0.0, 1.0, 201 * scale)
    U, V = np.meshgrid(g, g, indexing="ij")
    yield "ilhs_cdf %dx%d k=3 t=7" % U.shape, lambda m: m.ilhs_cdf(U, V, 3, 7)

    model = synthetic_mixture()
    T = 256 * scale
    u = s.uniform((T, model.n))
    cumw = np.cumsum(exp_from_uniform(s.uniform((T, model.n + 2))), axis=1)
    yield "cftp_mixture_window n=%d T=%d" % (model.n, T), lambda m: m.cftp_mixture_window(model.ratio, u, cumw)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=7)
    p.add_argument("--scale", type=int, default=1, help="multiply problem sizes")
    args = p.parse_args(argv)
    mods = backends()
    if "cython" not in mods:
        print("compiled backend not built; only the numpy backend is available")
    names = sorted(mods)
    print(f"{'kernel':40s} " + " ".join(f"{n:>10s}" for n in names) + "   speedup")
    for label, call in cases(args.scale):
        outs = {n: call(mods[n]) for n in names}
        ref = outs["python"]
        for n in names:
            a = ref if isinstance(ref, tuple) else (ref,)
            b = outs[n] if isinstance(outs[n], tuple) else (outs[n],)
            assert all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b)), f"{label}: {n} differs"
        secs = {n: median_seconds(lambda: call(mods[n]), args.repeats) for n in names}
        speed = secs["python"] / secs["cython"] if "cython" in secs else float("nan")
        print(f"{label:40s} " + " ".join(f"{secs[n] * 1e3:8.2f}ms" for n in names) + f"   {speed:6.1f}x")


if __name__ == "__main__":
    main()
