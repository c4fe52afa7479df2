"""Hot geometry kernels: polygon rasterization and convex footprint clipping.

Each kernel has two implementations with identical semantics: a numba @njit
loop and a pure-numpy fallback. Set SCENEGEN_DISABLE_NUMBA=1 to force the
numpy path (benchmarks/bench_kernels.py compares the two).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("SCENEGEN_DISABLE_NUMBA", "") not in ("", "0")

try:
    if _DISABLE:
        raise ImportError("numba disabled by SCENEGEN_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ACTIVE = True
except ImportError:
    NUMBA_ACTIVE = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap(args[0]) if args and callable(args[0]) else wrap


# -- polygon rasterization ----------------------------------------------------
# Even-odd rule at pixel centers. Row r covers y in [r, r+1) * extent / res,
# so row 0 corresponds to y = 0.


def _polygon_mask_numpy(xs, ys, resolution, extent):
    n = xs.shape[0]
    step = extent / resolution
    centers = (np.arange(resolution) + 0.5) * step
    px = np.broadcast_to(centers[None, :], (resolution, resolution))
    py = np.broadcast_to(centers[:, None], (resolution, resolution))
    inside = np.zeros((resolution, resolution), dtype=bool)
    for i in range(n):
        x1, y1 = xs[i], ys[i]
        x2, y2 = xs[(i + 1) % n], ys[(i + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < xi)
    return inside


@njit(cache=not _DISABLE)
def _polygon_mask_njit(xs, ys, resolution, extent):
    n = xs.shape[0]
    step = extent / resolution
    out = np.zeros((resolution, resolution), dtype=np.bool_)
    for r in range(resolution):
        py = (r + 0.5) * step
        for c in range(resolution):
            px = (c + 0.5) * step
            inside = False
            for i in range(n):
                x1, y1 = xs[i], ys[i]
                j = i + 1
                if j == n:
                    j = 0
                x2, y2 = xs[j], ys[j]
                if (y1 > py) != (y2 > py):
                    xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
                    if px < xi:
                        inside = not inside
            out[r, c] = inside
    return out


def polygon_mask(vertices, resolution, extent):
    """Rasterize a simple polygon (list of [x, y] in meters) to a bool grid."""
    verts = np.asarray(vertices, dtype=np.float64)
    xs = np.ascontiguousarray(verts[:, 0])
    ys = np.ascontiguousarray(verts[:, 1])
    if NUMBA_ACTIVE:
        return _polygon_mask_njit(xs, ys, int(resolution), float(extent))
    return _polygon_mask_numpy(xs, ys, int(resolution), float(extent))


# -- convex polygon clipping ----------------------------------------------------
# Sutherland-Hodgman: clip subject (CCW) against each edge of a convex CCW
# clip polygon; area of the result by the shoelace formula. Two oriented box
# footprints intersect in at most 8 vertices.


def _clip_area_python(subject, clip):
    poly = [(float(p[0]), float(p[1])) for p in subject]
    nc = len(clip)
    for i in range(nc):
        if not poly:
            return 0.0
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % nc]
        ex, ey = bx - ax, by - ay
        out = []
        m = len(poly)
        for j in range(m):
            px, py = poly[j]
            qx, qy = poly[(j + 1) % m]
            p_in = ex * (py - ay) - ey * (px - ax) >= 0.0
            q_in = ex * (qy - ay) - ey * (qx - ax) >= 0.0
            if p_in:
                out.append((px, py))
            if p_in != q_in:
                denom = ex * (qy - py) - ey * (qx - px)
                if denom != 0.0:
                    t = (ey * (px - ax) - ex * (py - ay)) / denom
                    out.append((px + t * (qx - px), py + t * (qy - py)))
        poly = out
    area = 0.0
    m = len(poly)
    for j in range(m):
        x1, y1 = poly[j]
        x2, y2 = poly[(j + 1) % m]
        area += x1 * y2 - x2 * y1
    return abs(area) * 0.5


@njit(cache=not _DISABLE)
def _clip_area_njit(subject, clip):
    buf = np.empty((16, 2), dtype=np.float64)
    nxt = np.empty((16, 2), dtype=np.float64)
    m = subject.shape[0]
    for j in range(m):
        buf[j, 0] = subject[j, 0]
        buf[j, 1] = subject[j, 1]
    nc = clip.shape[0]
    for i in range(nc):
        if m == 0:
            return 0.0
        ax, ay = clip[i, 0], clip[i, 1]
        k = i + 1
        if k == nc:
            k = 0
        bx, by = clip[k, 0], clip[k, 1]
        ex, ey = bx - ax, by - ay
        cnt = 0
        for j in range(m):
            px, py = buf[j, 0], buf[j, 1]
            j2 = j + 1
            if j2 == m:
                j2 = 0
            qx, qy = buf[j2, 0], buf[j2, 1]
            p_in = ex * (py - ay) - ey * (px - ax) >= 0.0
            q_in = ex * (qy - ay) - ey * (qx - ax) >= 0.0
            if p_in:
                nxt[cnt, 0] = px
                nxt[cnt, 1] = py
                cnt += 1
            if p_in != q_in:
                denom = ex * (qy - py) - ey * (qx - px)
                if denom != 0.0:
                    t = (ey * (px - ax) - ex * (py - ay)) / denom
                    nxt[cnt, 0] = px + t * (qx - px)
                    nxt[cnt, 1] = py + t * (qy - py)
                    cnt += 1
        m = cnt
        for j in range(m):
            buf[j, 0] = nxt[j, 0]
            buf[j, 1] = nxt[j, 1]
    area = 0.0
    for j in range(m):
        j2 = j + 1
        if j2 == m:
            j2 = 0
        area += buf[j, 0] * buf[j2, 1] - buf[j2, 0] * buf[j, 1]
    return abs(area) * 0.5


def convex_clip_area(subject, clip):
    """Intersection area of two convex CCW polygons."""
    subject = np.asarray(subject, dtype=np.float64)
    clip = np.asarray(clip, dtype=np.float64)
    if NUMBA_ACTIVE:
        return float(_clip_area_njit(np.ascontiguousarray(subject), np.ascontiguousarray(clip)))
    return _clip_area_python(subject, clip)
