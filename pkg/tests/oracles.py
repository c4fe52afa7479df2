"""Independent verification oracles shared across test modules.

These deliberately avoid the library's own code paths: central finite
differences for gradients, and a dense voxel grid for oriented-box IoU.
"""

import math

import numpy as np

from scenegen.assembly import PlacedObject


def finite_difference(f, x, step=1e-3):
    """Central-difference gradient of scalar f at float64 array x."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f(x)
        flat[i] = orig - step
        lo = f(x)
        flat[i] = orig
        gf[i] = (hi - lo) / (2.0 * step)
    return g


def placed(x=0.0, y=0.0, z=0.5, theta=0.0, dims=(1.0, 1.0, 1.0)):
    return PlacedObject(catalog_id="t", category="bed", center=(x, y, z),
                        theta=theta, dims=dims)


def _aabb_half(o):
    r = math.radians(o.theta)
    c, s = abs(math.cos(r)), abs(math.sin(r))
    l, w, h = o.dims
    return np.array([(l * c + w * s) / 2, (l * s + w * c) / 2, h / 2])


def voxel_iou(a, b, res=128):
    """Oriented-box IoU by voxel counting on a shared res^3 grid spanning the
    union of the two boxes' bounding boxes."""
    lo = np.minimum(np.asarray(a.center) - _aabb_half(a),
                    np.asarray(b.center) - _aabb_half(b))
    hi = np.maximum(np.asarray(a.center) + _aabb_half(a),
                    np.asarray(b.center) + _aabb_half(b))
    axes = [np.linspace(lo[i], hi[i], res, endpoint=False) + (hi[i] - lo[i]) / (2 * res)
            for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")

    def inside(o):
        r = math.radians(o.theta)
        c, s = math.cos(r), math.sin(r)
        dx, dy, dz = gx - o.center[0], gy - o.center[1], gz - o.center[2]
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        return ((np.abs(lx) <= o.dims[0] / 2)
                & (np.abs(ly) <= o.dims[1] / 2)
                & (np.abs(dz) <= o.dims[2] / 2))

    in_a, in_b = inside(a), inside(b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union
