"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--n 200] [--repeat 2000]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from zosaddle import kernels
from zosaddle.algorithms import RunConfig, run
from zosaddle.oracles import EstimatorConfig
from zosaddle.problems import generate_paper_matrix, make_matrix_game


def _micro(n: int, repeat: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    z = rng.dirichlet(np.ones(2 * n))
    z[:n] /= z[:n].sum()
    z[n:] /= z[n:].sum()
    g = rng.standard_normal(2 * n)
    bounds = np.array([0, n, 2 * n], dtype=np.intp)
    v = rng.standard_normal(n)
    a, b = z[:n], z[n:]
    cases = {
        "entropy_prox": lambda: kernels.entropy_prox(z, g, bounds),
        "project_simplex": lambda: kernels.project_simplex(v),
        "kl_divergence": lambda: kernels.kl_divergence(a, b),
    }
    return {name: min(timeit.repeat(fn, number=repeat, repeat=3)) / repeat * 1e6 for name, fn in cases.items()}


def _end_to_end(n: int, iterations: int) -> float:
    problem = make_matrix_game(generate_paper_matrix(n, 0))
    cfg = RunConfig("zovia", EstimatorConfig("random_direction", 1e-4), gamma=1e-3,
                    iterations=iterations, seed=0, trace_every=iterations)
    start = timeit.default_timer()
    run(problem, None, cfg)
    return (timeit.default_timer() - start) / (iterations + 1) * 1e6


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=2000)
    parser.add_argument("--iterations", type=int, default=5000)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    results = {}
    for backend in backends:
        kernels.set_backend(backend)
        row = _micro(args.n, args.repeat)
        row["zovia iteration"] = _end_to_end(args.n, args.iterations)
        results[backend] = row

    names = list(next(iter(results.values())))
    print(f"{'kernel (us/call)':<20}" + "".join(f"{b:>12}" for b in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for name in names:
        line = f"{name:<20}" + "".join(f"{results[b][name]:>12.2f}" for b in backends)
        if len(backends) == 2:
            line += f"{results['python'][name] / results['cython'][name]:>11.2f}x"
        print(line)


if __name__ == "__main__":
    main()
