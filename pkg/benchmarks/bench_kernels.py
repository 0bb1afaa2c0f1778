"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each kernel path in a subprocess (the backend is chosen at import time
via the INSIGHTRANK_NO_NUMBA environment variable) and prints per-call
timings plus the speedup.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--sizes L,F,r ...]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap

_WORKER = textwrap.dedent(
    """
    import json, sys, timeit
    import numpy as np
    from insightrank import kernels

    repeats = int(sys.argv[1])
    sizes = json.loads(sys.argv[2])
    rng = np.random.default_rng(0)
    out = {"using_numba": kernels.USING_NUMBA, "results": []}
    for L, F, r in sizes:
        x = rng.normal(size=L)
        w = rng.normal(size=(F, r))
        b = rng.normal(size=F)
        pooled, arg, _ = kernels.conv1d_pool_forward(x, w, b)
        dpooled = rng.normal(size=F)
        grad = rng.normal(size=F * r)
        param = rng.normal(size=F * r)
        m = np.zeros(F * r)
        v = np.zeros(F * r)

        fwd = timeit.timeit(
            lambda: kernels.conv1d_pool_forward(x, w, b), number=repeats
        )
        bwd = timeit.timeit(
            lambda: kernels.conv1d_pool_backward(x, w, b, arg, pooled, dpooled),
            number=repeats,
        )
        adam = timeit.timeit(
            lambda: kernels.adam_update(
                param, grad, m, v, 1e-3, 0.9, 0.999, 1e-8, 1
            ),
            number=repeats,
        )
        out["results"].append(
            {"L": L, "F": F, "r": r,
             "forward_us": 1e6 * fwd / repeats,
             "backward_us": 1e6 * bwd / repeats,
             "adam_us": 1e6 * adam / repeats}
        )
    print(json.dumps(out))
    """
)


def run_backend(disable_numba: bool, repeats: int, sizes) -> dict:
    env = dict(os.environ)
    env.pop("INSIGHTRANK_NO_NUMBA", None)
    if disable_numba:
        env["INSIGHTRANK_NO_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, "-c", _WORKER, str(repeats), json.dumps(sizes)],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(proc.stdout)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument(
        "--sizes",
        nargs="*",
        default=["16,64,3", "64,64,3", "256,128,5"],
        help="comma-separated L,F,r triples",
    )
    args = parser.parse_args(argv)
    sizes = [tuple(int(v) for v in s.split(",")) for s in args.sizes]

    numpy_run = run_backend(True, args.repeats, sizes)
    numba_run = run_backend(False, args.repeats, sizes)
    if numba_run["using_numba"] == numpy_run["using_numba"]:
        print("warning: numba backend unavailable; comparing numpy to itself")

    header = f"{'L':>5} {'F':>5} {'r':>3} {'kernel':>9} {'numpy us':>10} {'numba us':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for np_res, nb_res in zip(numpy_run["results"], numba_run["results"]):
        for kernel in ("forward", "backward", "adam"):
            t_np = np_res[f"{kernel}_us"]
            t_nb = nb_res[f"{kernel}_us"]
            print(
                f"{np_res['L']:>5} {np_res['F']:>5} {np_res['r']:>3} "
                f"{kernel:>9} {t_np:>10.2f} {t_nb:>10.2f} {t_np / t_nb:>7.2f}x"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
