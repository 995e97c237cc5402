"""Time the Jacobi eigensolver backends against numpy.linalg.eigh.

    python3 benchmarks/bench_eigh.py --sizes 4 8 16 32 64 --repeat 20
"""
import argparse
import time

import numpy as np

from qsvsim import kernels
from qsvsim._jacobi_fallback import jacobi_eigh as python_eigh

try:
    from qsvsim._jacobi import jacobi_eigh as cython_eigh
except ImportError:
    cython_eigh = None


def random_hermitian(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def best_of(fn, mats, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for m in mats:
            fn(m)
        best = min(best, time.perf_counter() - t0)
    return best / len(mats)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    parser.add_argument("--count", type=int, default=5, help="matrices per size")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    backends = [("python", lambda m: python_eigh(m, 1e-12))]
    if cython_eigh is not None:
        backends.insert(0, ("cython", lambda m: cython_eigh(m, 1e-12)))
    backends.append(("numpy", np.linalg.eigh))

    print(f"default backend: {kernels.BACKEND}")
    print(f"{'n':>4} " + " ".join(f"{name + ' (us)':>14}" for name, _ in backends) + f" {'max |dw|':>10}")
    for n in args.sizes:
        mats = [random_hermitian(n, rng) for _ in range(args.count)]
        times = [best_of(fn, mats, args.repeat) for _, fn in backends]
        err = max(np.max(np.abs(np.sort(python_eigh(m, 1e-12)[0]) - np.linalg.eigvalsh(m))) for m in mats)
        print(f"{n:>4} " + " ".join(f"{t * 1e6:>14.1f}" for t in times) + f" {err:>10.2e}")


if __name__ == "__main__":
    main()
