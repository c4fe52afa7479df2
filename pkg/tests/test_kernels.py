import numpy as np
import pytest

from scenegen import kernels


RECT = np.array([[1.0, 1.0], [5.0, 1.0], [5.0, 4.0], [1.0, 4.0]])


def random_polygon(rng):
    # star-convex polygon around a random center: always simple
    cx, cy = rng.uniform(2.0, 4.0, size=2)
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=rng.integers(3, 9)))
    radii = rng.uniform(0.5, 1.8, size=angles.size)
    return np.stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)], axis=1)


def test_mask_paths_agree():
    rng = np.random.default_rng(0)
    for _ in range(10):
        poly = random_polygon(rng)
        xs = np.ascontiguousarray(poly[:, 0])
        ys = np.ascontiguousarray(poly[:, 1])
        a = kernels._polygon_mask_numpy(xs, ys, 96, 6.0)
        b = kernels._polygon_mask_njit.py_func(xs, ys, 96, 6.0) if kernels.NUMBA_ACTIVE else a
        c = kernels.polygon_mask(poly, 96, 6.0)
        assert (a == c).all()
        assert (b == c).all()


def test_clip_paths_agree():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = random_polygon(rng)[:4]
        b = random_polygon(rng)[:4]
        if a.shape[0] < 3 or b.shape[0] < 3:
            continue
        ref = kernels._clip_area_python(a, b)
        got = kernels.convex_clip_area(a, b)
        assert got == pytest.approx(ref, abs=1e-9)


def test_clip_known_squares():
    a = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]])
    b = a + np.array([1.0, 1.0])
    assert kernels.convex_clip_area(a, b) == pytest.approx(1.0)
    assert kernels.convex_clip_area(a, a) == pytest.approx(4.0)
    far = a + np.array([10.0, 0.0])
    assert kernels.convex_clip_area(a, far) == 0.0


def test_mask_rect_matches_analytic():
    m = kernels.polygon_mask(RECT, 128, 6.0)
    assert m.mean() == pytest.approx((4.0 * 3.0) / 36.0, abs=0.01)
