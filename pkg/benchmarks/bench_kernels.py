"""Compare the numba kernels against their pure-numpy fallbacks.

Run after `pip install -e .`:

    python benchmarks/bench_kernels.py

SCENEGEN_DISABLE_NUMBA only affects which path `scenegen.kernels` dispatches
to at import time; here both implementations are timed directly.
"""

import time

import numpy as np

from scenegen import kernels


def timeit(fn, *args, repeat=5, warmup=1):
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_polygon_mask():
    poly = np.array([[0.5, 0.5], [5.5, 0.5], [5.5, 3.0], [3.0, 3.0], [3.0, 5.5], [0.5, 5.5]])
    xs = np.ascontiguousarray(poly[:, 0])
    ys = np.ascontiguousarray(poly[:, 1])
    rows = []
    for res in (64, 256, 512):
        t_np = timeit(kernels._polygon_mask_numpy, xs, ys, res, 6.0)
        if kernels.NUMBA_ACTIVE:
            t_nb = timeit(kernels._polygon_mask_njit, xs, ys, res, 6.0)
        else:
            t_nb = float("nan")
        rows.append((f"polygon_mask {res}x{res}", t_np, t_nb))
    return rows


def bench_clip():
    rng = np.random.default_rng(0)
    quads = []
    for _ in range(2000):
        c = rng.uniform(1, 5, 2)
        ang = rng.uniform(0, np.pi)
        r = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        half = rng.uniform(0.2, 1.0, 2)
        corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]]) * half
        quads.append(corners @ r.T + c)

    def run_python():
        for i in range(0, 2000, 2):
            kernels._clip_area_python(quads[i], quads[i + 1])

    def run_njit():
        for i in range(0, 2000, 2):
            kernels._clip_area_njit(quads[i], quads[i + 1])

    t_py = timeit(run_python)
    t_nb = timeit(run_njit) if kernels.NUMBA_ACTIVE else float("nan")
    return [("convex_clip_area x1000", t_py, t_nb)]


def main():
    print(f"numba active: {kernels.NUMBA_ACTIVE}")
    print(f"{'kernel':28s} {'numpy/python':>14s} {'numba':>12s} {'speedup':>9s}")
    for name, t_np, t_nb in bench_polygon_mask() + bench_clip():
        speedup = t_np / t_nb if t_nb == t_nb and t_nb > 0 else float("nan")
        print(f"{name:28s} {t_np * 1e3:11.2f} ms {t_nb * 1e3:9.2f} ms {speedup:8.1f}x")


if __name__ == "__main__":
    main()
