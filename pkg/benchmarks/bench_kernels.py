"""Compare the compiled kernels against the NumPy reference.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3]

Each workload is timed for every available backend and the outputs are
checked for agreement before the timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pwsparse.generators import identity_hadamard, union_general
from pwsparse.kernels import available_backends


def _workloads():
    spark_a = np.ascontiguousarray(union_general(7, 2, 0.5, 0).matrix)
    ih = np.ascontiguousarray(identity_hadamard(8).matrix)
    b = ih[:, 3] - 0.5 * ih[:, 12] + 2.0 * ih[:, 9]
    rng = np.random.default_rng(0)
    values = np.abs(rng.standard_normal((400, 399)))
    return {
        "spark k=5, 7x14 (2002 subsets)": lambda k: k.first_dependent_subset(spark_a, 5, 1e-10, 10**7),
        "l0 k=3, 8x16 (560 supports)": lambda k: k.fitting_subsets(ih, b, 3, 1e-8, 10**7),
        "babel table 400x399, depth 50": lambda k: k.topk_prefix_max(values, 50),
    }


def _same(x, y) -> bool:
    if isinstance(x, np.ndarray):
        return np.allclose(x, y, rtol=0, atol=1e-12)
    return repr(x) == repr(y)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(sorted(backends))}")
    for name, work in _workloads().items():
        timings, outputs = {}, {}
        for bname, mod in sorted(backends.items()):
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                outputs[bname] = work(mod)
                best = min(best, time.perf_counter() - t0)
            timings[bname] = best
        agree = all(_same(outputs["python"], out) for out in outputs.values())
        cols = "  ".join(f"{b}={t * 1e3:9.2f} ms" for b, t in timings.items())
        speedup = ""
        if "cython" in timings:
            speedup = f"  speedup x{timings['python'] / timings['cython']:.1f}"
        print(f"{name:34s} {cols}{speedup}  agree={agree}")


if __name__ == "__main__":
    main()
