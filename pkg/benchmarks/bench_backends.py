"""Wall time of each kernel under the numba and numpy backends.

Usage: python benchmarks/bench_backends.py [--repeat R] [--scale S]

Every kernel is run once per backend to warm up (numba compiles on first
call, or loads its cache), then timed ``R`` times; the best time is
reported.  ``--scale`` multiplies the problem sizes.  The outputs of the two
backends are also compared bit for bit.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stoklab import _backend, sde
from stoklab.discrete import OffspringDistribution
from stoklab.kernels import bm, discrete, exit, rng, thomas


def _cases(scale: float):
    n = lambda k: max(1, int(k * scale))  # noqa: E731
    ou = sde.ou_spec()
    chain = np.cumsum(np.full((21, 21), 1 / 21), axis=1)
    gw_cdf = np.cumsum(OffspringDistribution.binomial(3, 0.5).probabilities)
    diag = np.full(n(20_000), -2.0)
    off = np.ones_like(diag)
    rhs = np.linspace(0, 1, diag.size)
    return {
        "gaussian_grid": lambda: rng.gaussian_grid(1, 0, n(200), 0, 5000),
        "running_max": lambda: bm.running_max(1, 0, n(2000), 1000, 1e-3),
        "walk_paths": lambda: discrete.walk_paths(1, 0, n(2000), 1000),
        "chain_paths": lambda: discrete.chain_paths(chain, 0, 1, 0, n(1000), 1000),
        "polya_reds": lambda: discrete.polya_reds(1, 1, 1, 1, 0, n(2000), 500),
        "gw_generations": lambda: discrete.gw_generations(gw_cdf, 1, 1, 0, n(5000), 100, 1000),
        "exit_1d": lambda: exit.exit_1d(ou.drift, ou.diffusion, 0.0, -1.0, 1.0, 1e-3, 10**7, 1, 0, n(500)),
        "ball_exit": lambda: exit.ball_exit(np.zeros(3), 0.0, 1.0, False, 1e-3, 1e-3, 0.0, 10**7, 1, 0, n(500)),
        "positive_fraction": lambda: exit.positive_fraction(1, 0, n(1000), 1000, 1e-3),
        "thomas": lambda: thomas.solve_tridiagonal(off, diag, off, rhs),
    }


def _best(fn, repeat: int):
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--scale", type=float, default=1.0)
    args = parser.parse_args(argv)
    print(f"{'kernel':<18} {'numba s':>10} {'numpy s':>10} {'speedup':>8}  identical")
    all_same = True
    for name, fn in _cases(args.scale).items():
        timings, outputs = {}, {}
        for backend in ("numba", "numpy"):
            with _backend.use(backend):
                timings[backend], outputs[backend] = _best(fn, args.repeat)
        same = _same(outputs["numba"], outputs["numpy"])
        all_same &= same
        speedup = timings["numpy"] / timings["numba"]
        print(f"{name:<18} {timings['numba']:>10.4f} {timings['numpy']:>10.4f} {speedup:>8.1f}  {same}")
    return 0 if all_same else 1


if __name__ == "__main__":
    raise SystemExit(main())
