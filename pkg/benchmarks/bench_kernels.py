"""Compare the compiled and numpy kernel backends.

Times each kernel in isolation and a full stochastic solve on the path-3
Gaussian fixture (the solve is dominated by oracle sampling, so the gap there
is smaller than for the bare kernels).

    python3 benchmarks/bench_kernels.py [--repeat 5] [--m 200] [--n 8]
"""

import argparse
import timeit

import numpy as np

from duonet import kernels
from duonet.barycenter import EntropicOTOracle
from duonet.config import SolverConfig
from duonet.graph import build_graph
from duonet.problems import quadratic_consensus
from duonet.solver_stoch import solve_stochastic


def cases(m, n):
    rng = np.random.default_rng(0)
    g = build_graph("erdos_renyi", m, p=0.05, seed=1)
    X = rng.normal(size=(m, n))
    z, y = rng.normal(size=(2, m, n))
    C = rng.uniform(0, 1, (64, 64))
    u = rng.normal(size=64)
    ot = EntropicOTOracle(C, rng.dirichlet(np.ones(64)), 0.05)
    uniforms = rng.random(200_000)
    P = quadratic_consensus(build_graph("path", 3), n=2, sigma_x_sq=1.0)
    cfg = SolverConfig(eps=0.05, c_N=4.0, M_F_sq=P.M_F_sq, seed=0)
    return {
        "laplacian_apply": lambda: kernels.laplacian_apply(g.indptr, g.indices, X),
        "coupled_average": lambda: kernels.coupled_average(0.3, z, 1.2, y, 1.5),
        "column_softmax": lambda: kernels.column_softmax(C, u, 0.05),
        "categorical_counts": lambda: kernels.categorical_counts(ot._cdf, uniforms, ot._last),
        "solve_stochastic": lambda: solve_stochastic(P.graph, P.oracles, cfg, keep_trace=False),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--m", type=int, default=200)
    ap.add_argument("--n", type=int, default=8)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the numpy backend is available")
    bench = cases(args.m, args.n)
    results = {}
    for name in backends:
        prev = kernels.use_backend(name)
        try:
            for case, fn in bench.items():
                fn()  # warm up
                number = 1 if case == "solve_stochastic" else 20
                t = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
                results[case, name] = t
        finally:
            kernels.use_backend(prev)

    print(f"{'case':<20}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for case in bench:
        row = f"{case:<20}" + "".join(f"{results[case, b] * 1e3:>12.3f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{results[case, 'python'] / results[case, 'compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
