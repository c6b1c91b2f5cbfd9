"""Numba vs numpy backend timings for the Monte Carlo hot loops.

    python3 benchmarks/bench_kernels.py [--samples N] [--repeat R]
"""

import argparse
import time

import numpy as np

from cogrelay import _kernels
from cogrelay.config import SystemConfig, Topology, stats_from_topology
from cogrelay.montecarlo import mc_secondary_outage, mean_row, sinr_params
from cogrelay.power import power_budget


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--L", type=int, default=2)
    args = ap.parse_args()

    cfg = SystemConfig(L=args.L)
    stats = stats_from_topology(Topology())
    budget = power_budget(cfg, stats)
    p = sinr_params(cfg, budget)
    key = _kernels.stream_key(1)
    width = _kernels.stride(args.L)
    n = args.samples

    backends = [_kernels.NUMPY]
    try:
        backends.append(_kernels.get_backend("numba"))
    except RuntimeError:
        print("numba unavailable, numpy only")

    scale = mean_row(stats, args.L)
    block = _kernels.NUMPY.exp_block(key, 0, n, width) * scale
    for be in backends:
        be.exp_block(key, 0, 1024, width)  # warm up / compile
        be.e2e_sinr(block[:1024], args.L, p)
        be.sinr_chunk(key, 0, 1024, args.L, scale, p)
        t_rng = best_of(lambda: be.exp_block(key, 0, n, width), args.repeat)
        t_sinr = best_of(lambda: be.e2e_sinr(block, args.L, p), args.repeat)
        t_fused = best_of(lambda: be.sinr_chunk(key, 0, n, args.L, scale, p), args.repeat)
        t_mc = best_of(lambda: mc_secondary_outage(cfg, stats, budget, cfg.zeta_s, n, 1, backend=be), args.repeat)
        print(
            f"{be.name:6s} exp_block {t_rng * 1e3:8.1f} ms   e2e_sinr {t_sinr * 1e3:8.1f} ms   "
            f"sinr_chunk {t_fused * 1e3:8.1f} ms   mc_secondary_outage {t_mc * 1e3:8.1f} ms   ({n} samples, L={args.L})"
        )

    if len(backends) == 2:
        a = backends[0].uniforms(key, 0, 4096)
        b = backends[1].uniforms(key, 0, 4096)
        print("uniforms bit-identical:", bool(np.array_equal(a, b)))


if __name__ == "__main__":
    main()
