#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Run with the package installed:

    python benchmarks/bench_kernels.py

The numpy fallback is what you get with MGDISPATCH_NUMBA=0; both paths
produce bit-identical results, so this only measures speed.
"""

import time

import numpy as np

from mgdispatch import _kernels as K

if not K.USE_NUMBA:
    raise SystemExit("numba backend unavailable or disabled; nothing to "
                     "compare (unset MGDISPATCH_NUMBA and install numba)")

from numba import njit  # noqa: E402

jit_conv_add = njit(cache=True)(K._conv_add_loops)
jit_conv_sub = njit(cache=True)(K._conv_sub_floor_loops)
jit_repair = njit(cache=True)(K._repair_pass_impl)


def bench(label, fn, args, repeats, check=None):
    fn(*args)  # warm-up / JIT compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn(*args)
    per_call = (time.perf_counter() - t0) / repeats
    if check is not None:
        ref = check(*args)
        same = all(np.array_equal(np.asarray(a), np.asarray(b))
                   for a, b in zip(np.atleast_1d(out), np.atleast_1d(ref))) \
            if isinstance(out, tuple) else np.array_equal(out, ref)
        assert same, f"{label}: backend results differ"
    print(f"  {label:<34s} {per_call * 1e6:10.1f} us/call")
    return per_call


def repair_args(rng, n_units=3, horizon=24):
    u = (rng.random((n_units, horizon)) < 0.5).astype(np.float64)
    return (u,
            rng.uniform(0, 60, (n_units, horizon)),
            rng.uniform(0, 20, (n_units, horizon)),
            rng.uniform(0, 30, horizon),
            rng.uniform(0, 30, horizon),
            rng.uniform(0, 30, horizon),
            np.array([3.0, 4.0, 6.0]), np.array([30.0, 40.0, 60.0]),
            10.0, 100.0, 50.0, 30.0, 30.0, 0.9, 0.9, 1.0,
            rng.uniform(40, 120, horizon), rng.uniform(15, 26, horizon))


def main():
    rng = np.random.default_rng(42)
    for n in (50, 200, 500):
        a = rng.dirichlet(np.ones(n))
        b = rng.dirichlet(np.ones(n))
        print(f"convolution kernels, sequence length {n}:")
        t_np = bench("seq add (numpy fallback)", K._conv_add_numpy, (a, b), 50)
        t_nb = bench("seq add (numba)", jit_conv_add, (a, b), 200,
                     check=K._conv_add_numpy)
        print(f"  {'speedup':<34s} {t_np / t_nb:10.1f} x")
        t_np = bench("seq sub-floor (numpy fallback)",
                     K._conv_sub_floor_numpy, (a, b), 50)
        t_nb = bench("seq sub-floor (numba)", jit_conv_sub, (a, b), 200,
                     check=K._conv_sub_floor_numpy)
        print(f"  {'speedup':<34s} {t_np / t_nb:10.1f} x")

    print("schedule repair pass, 3 units x 24 periods:")
    args = repair_args(np.random.default_rng(7))

    def fresh_py(*_):
        return K._repair_pass_impl(*[np.copy(x) if isinstance(x, np.ndarray)
                                     else x for x in args])

    def fresh_nb(*_):
        return jit_repair(*[np.copy(x) if isinstance(x, np.ndarray)
                            else x for x in args])

    t_py = bench("repair (python fallback)", fresh_py, (), 200)
    t_nb = bench("repair (numba)", fresh_nb, (), 2000)
    print(f"  {'speedup':<34s} {t_py / t_nb:10.1f} x")


if __name__ == "__main__":
    main()
