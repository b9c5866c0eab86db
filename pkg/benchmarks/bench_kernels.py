"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--nodes 50 100 200] [--repeat 5]

Each kernel runs on identical inputs under both backends; outputs are
checked for equality before timings are reported.
"""

from __future__ import annotations

import argparse
import random
import timeit

import numpy as np

from mogmesh import _pykernels

try:
    from mogmesh import _ckernels
except ImportError:
    _ckernels = None


def geometric_inputs(n: int, seed: int = 0):
    rng = random.Random(seed)
    side = 10.0 * n**0.5
    xs = np.array([rng.uniform(0, side) for _ in range(n)])
    ys = np.array([rng.uniform(0, side) for _ in range(n)])
    ranges = np.array([rng.uniform(12.0, 25.0) for _ in range(n)])
    return xs, ys, ranges, np.ones(n, dtype=np.uint8)


def csr_inputs(n: int, seed: int = 0):
    pairs = _pykernels.geometric_edges(*geometric_inputs(n, seed))
    adj = [[] for _ in range(n)]
    for i, j in pairs:
        adj[int(i)].append(int(j))
        adj[int(j)].append(int(i))
    indptr = np.zeros(n + 1, dtype=np.int32)
    indices = []
    for i, row in enumerate(adj):
        indices.extend(sorted(row))
        indptr[i + 1] = len(indices)
    indices = np.array(indices, dtype=np.int32)
    return indptr, indices, np.ones(len(indices), dtype=np.int32)


def best_of(fn, repeat: int) -> float:
    runs = timeit.repeat(fn, number=1, repeat=repeat)
    return min(runs)


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; only the Python backend is available")
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])

    print(f"{'kernel':<18}{'n':>6}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}")
    for n in args.nodes:
        geo = geometric_inputs(n)
        csr = csr_inputs(n)
        blob = bytes(random.Random(n).randbytes(64 * n))
        cases = [
            ("geometric_edges", lambda k: k.geometric_edges(*geo)),
            ("all_pairs_routes", lambda k: k.all_pairs_routes(*csr)),
            ("fnv1a64", lambda k: k.fnv1a64(blob)),
        ]
        for label, call in cases:
            results = [call(k) for _, k in backends]
            for other in results[1:]:
                same = (
                    all(np.array_equal(a, b) for a, b in zip(results[0], other))
                    if isinstance(other, tuple)
                    else np.array_equal(results[0], other)
                )
                if not same:
                    raise SystemExit(f"{label}: backends disagree at n={n}")
            times = [best_of(lambda k=k: call(k), args.repeat) for _, k in backends]
            speed = f"{times[0] / times[-1]:>9.1f}x" if len(times) > 1 else f"{'-':>10}"
            print(f"{label:<18}{n:>6}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
