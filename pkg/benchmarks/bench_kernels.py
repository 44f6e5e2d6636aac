"""Compare the compiled and pure-Python kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per kernel and backend and the largest
difference between the two backends' outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from robin_annulus import kernels


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=4096)
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--vertices", type=int, default=720)
    args = ap.parse_args()

    backends = {"compiled": None, "python": kernels.load_backend("python")}
    try:
        backends["compiled"] = kernels.load_backend("compiled")
    except ImportError:
        del backends["compiled"]
        print("compiled backend unavailable; benchmarking the fallback only")

    rng = np.random.default_rng(0)
    theta = np.linspace(0, 2 * np.pi, args.vertices, endpoint=False)
    verts = np.ascontiguousarray(np.column_stack([np.cos(theta), np.sin(theta)]))
    pts = np.ascontiguousarray(rng.uniform(-0.7, 0.7, size=(args.points, 2)))

    outputs = {}
    print(f"{'kernel':<24}{'backend':<10}{'seconds':>12}")
    for name, mod in backends.items():
        psi = np.empty(args.steps + 1)
        w = np.empty(args.steps + 1)
        t = best_of(lambda: mod.shoot(3.0, 2, 0.65, 1.0, 2.0, args.steps, psi, w), args.repeat)
        print(f"{'shoot (p=3)':<24}{name:<10}{t:>12.5f}")
        out = np.empty(len(pts))
        t2 = best_of(lambda: mod.min_segment_distance(pts, verts, out), max(1, args.repeat // 2))
        print(f"{'segment distance':<24}{name:<10}{t2:>12.5f}")
        outputs[name] = (psi.copy(), out.copy())
    if len(outputs) == 2:
        (pc, dc), (pp, dp) = outputs["compiled"], outputs["python"]
        print(f"max |psi difference|      {np.max(np.abs(pc - pp)):.3e}")
        print(f"max |distance difference| {np.max(np.abs(dc - dp)):.3e}")


if __name__ == "__main__":
    main()
