#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times position interpolation and contact scanning on desk-scale inputs,
verifies both paths produce identical outputs, and reports the speedup.
The same selection can be forced at runtime with PRIF_NO_NUMBA=1.

Run: python benchmarks/bench_kernels.py [--nodes N] [--duration S]
"""

import argparse
import time

import numpy as np

from prif.sim import kernels, mobility


def time_call(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=63)
    ap.add_argument("--duration", type=float, default=40_000.0)
    args = ap.parse_args()

    n = args.nodes
    legs = mobility.build_itineraries(
        (4500.0, 3400.0),
        np.full(n, 0.5), np.full(n, 13.9),
        np.full(n, 100.0), np.full(n, 200.0),
        args.duration, seed=7)
    ticks = np.arange(0.0, args.duration + 1.0, 1.0)
    minr2 = mobility.min_range_matrix(np.full(n, 50.0))
    pos_args = (legs.leg_off, legs.t0, legs.x0, legs.y0, legs.x1, legs.y1,
                legs.vx, legs.vy, legs.tarr, ticks)

    print(f"nodes={n} ticks={len(ticks)} legs={legs.t0.shape[0]} "
          f"numba_available={kernels.HAVE_NUMBA} "
          f"selected={'numba' if kernels.USE_NUMBA else 'numpy'}")

    t_np_pos, pos_np = time_call(kernels.positions_numpy, *pos_args)
    print(f"positions  numpy : {t_np_pos * 1e3:9.1f} ms")
    if kernels.HAVE_NUMBA:
        kernels.positions_numba(*pos_args)   # compile outside the timer
        t_nb_pos, pos_nb = time_call(kernels.positions_numba, *pos_args)
        assert np.array_equal(pos_np, pos_nb), "position kernels disagree"
        print(f"positions  numba : {t_nb_pos * 1e3:9.1f} ms "
              f"({t_np_pos / t_nb_pos:.1f}x)")

    adj = np.zeros((n, n), dtype=bool)
    t_np_sc, out_np = time_call(kernels.transitions_numpy, pos_np, minr2, adj.copy())
    print(f"contacts   numpy : {t_np_sc * 1e3:9.1f} ms "
          f"({out_np[0].size} transitions)")
    if kernels.HAVE_NUMBA:
        kernels.transitions_numba(pos_np[:64], minr2, adj.copy())  # compile
        t_nb_sc, out_nb = time_call(kernels.transitions_numba, pos_np, minr2,
                                    adj.copy())
        for a, b in zip(out_np, out_nb):
            assert np.array_equal(a, b), "contact kernels disagree"
        print(f"contacts   numba : {t_nb_sc * 1e3:9.1f} ms "
              f"({t_np_sc / t_nb_sc:.1f}x)")
        total_np = t_np_pos + t_np_sc
        total_nb = t_nb_pos + t_nb_sc
        print(f"total             numpy {total_np * 1e3:.1f} ms, "
              f"numba {total_nb * 1e3:.1f} ms, speedup {total_np / total_nb:.1f}x")
        print("outputs identical across paths")


if __name__ == "__main__":
    main()
