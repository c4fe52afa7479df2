"""Continuous-space scene model: categories, objects, floor plans, quantization.

Conventions fixed here and relied on everywhere else:
  - coordinates in meters inside [0, extent) per axis; z is height
  - an object at theta=0 faces +x; dims = (l, w, h) = depth along facing
    axis, lateral width, vertical height
  - theta in degrees, [0, 360), counter-clockwise about the vertical axis
  - mask row 0 corresponds to y=0
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .kernels import polygon_mask

LOCATION_BINS = 256
ORIENTATION_BINS = 360
MAX_OBJECTS = 50


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class CategoryTable:
    """Category vocabulary with training-set frequencies and door/window flags."""

    names: tuple
    frequencies: tuple
    door: str = "door"
    window: str = "window"

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise SceneError("category names must be unique")
        if len(self.frequencies) != len(self.names):
            raise SceneError("one frequency per category required")
        if any(f < 0 for f in self.frequencies):
            raise SceneError("frequencies must be >= 0")
        for special in (self.door, self.window):
            if special not in self.names:
                raise SceneError(f"special category {special!r} missing from table")

    def __len__(self):
        return len(self.names)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise SceneError(f"unknown category {name!r}") from None

    def name(self, idx):
        if not 0 <= idx < len(self.names):
            raise SceneError(f"category index {idx} out of range")
        return self.names[idx]

    @property
    def door_index(self):
        return self.names.index(self.door)

    @property
    def window_index(self):
        return self.names.index(self.window)

    def is_door(self, idx):
        return idx == self.door_index

    def is_window(self, idx):
        return idx == self.window_index

    def frequency(self, idx):
        return self.frequencies[idx]

    def with_frequencies(self, freqs):
        return replace(self, frequencies=tuple(freqs))

    def to_dict(self):
        return {
            "names": list(self.names),
            "frequencies": list(self.frequencies),
            "door": self.door,
            "window": self.window,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), tuple(d["frequencies"]), d.get("door", "door"), d.get("window", "window"))


@dataclass(frozen=True)
class ObjectInstance:
    category: int
    center: tuple  # (x, y, z) meters
    theta: float  # degrees in [0, 360)
    dims: tuple  # (l, w, h) meters, strictly positive

    def __post_init__(self):
        if any(d <= 0 for d in self.dims):
            raise SceneError(f"dimensions must be strictly positive, got {self.dims}")
        if not 0.0 <= self.theta < 360.0:
            raise SceneError(f"theta must lie in [0, 360), got {self.theta}")


@dataclass(frozen=True)
class FloorPlan:
    polygon: tuple  # ((x, y), ...) counter-clockwise, meters
    doors: tuple = ()
    windows: tuple = ()

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise SceneError("floor polygon needs at least 3 vertices")
        if abs(polygon_area(self.polygon)) < 1e-9:
            raise SceneError("degenerate floor polygon (zero area)")
        if _self_intersects(self.polygon):
            raise SceneError("floor polygon must be simple (non-self-intersecting)")
        if polygon_area(self.polygon) < 0:
            object.__setattr__(self, "polygon", tuple(reversed(self.polygon)))

    def mask(self, resolution, extent):
        return rasterize_floor(self.polygon, resolution, extent)

    def contains(self, x, y):
        return point_in_polygon(x, y, self.polygon)


@dataclass(frozen=True)
class Scene:
    objects: tuple
    floor: FloorPlan
    extent: float

    def __post_init__(self):
        if len(self.objects) > MAX_OBJECTS:
            raise SceneError(f"scene exceeds {MAX_OBJECTS} objects")

    def furniture(self, table):
        return tuple(o for o in self.objects if not table.is_door(o.category) and not table.is_window(o.category))


def polygon_area(polygon):
    """Signed shoelace area; positive for counter-clockwise."""
    area = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area * 0.5


def point_in_polygon(x, y, polygon):
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                inside = not inside
    return inside


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _self_intersects(polygon):
    n = len(polygon)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]):
                return True
    return False


# -- canonical ordering ---------------------------------------------------------


def sort_scene(scene, table):
    """Doors, then windows, then descending category frequency; ties by (x,y,z)."""
    for o in scene.objects:
        if not 0 <= o.category < len(table):
            raise SceneError(f"object category {o.category} not in table")

    def key(o):
        if table.is_door(o.category):
            group = 0
        elif table.is_window(o.category):
            group = 1
        else:
            group = 2
        return (group, -table.frequency(o.category), o.category, o.center)

    return replace(scene, objects=tuple(sorted(scene.objects, key=key)))


def is_sorted(scene, table):
    return sort_scene(scene, table).objects == scene.objects


# -- quantization ----------------------------------------------------------------


def quantize_value(v, kind, extent=None):
    """Map meters/degrees to an integer token value.

    location/dimension: clamp(floor(v/extent * 256), 0, 255)
    orientation: round(v) mod 360 (half-up)
    """
    if kind == "orientation":
        if not 0.0 <= v < 360.0:
            raise SceneError(f"orientation {v} outside [0, 360)")
        return int(math.floor(v + 0.5)) % ORIENTATION_BINS
    if kind in ("location", "dimension"):
        if v < 0:
            raise SceneError(f"{kind} value {v} must be non-negative")
        return min(LOCATION_BINS - 1, int(math.floor(v / extent * LOCATION_BINS)))
    raise SceneError(f"unknown quantization kind {kind!r}")


def dequantize_value(token, kind, extent=None):
    """Inverse of quantize_value: bin center for location/dimension, degrees as-is."""
    if kind == "orientation":
        if not 0 <= token < ORIENTATION_BINS:
            raise SceneError(f"orientation token {token} out of range")
        return float(token)
    if kind in ("location", "dimension"):
        if not 0 <= token < LOCATION_BINS:
            raise SceneError(f"{kind} token {token} out of range")
        return (token + 0.5) * extent / LOCATION_BINS
    raise SceneError(f"unknown quantization kind {kind!r}")


# -- augmentation -----------------------------------------------------------------


def _rot90_point(x, y, k, c):
    """Rotate (x, y) about (c, c) by k*90 degrees counter-clockwise."""
    dx, dy = x - c, y - c
    for _ in range(k):
        dx, dy = -dy, dx
    return c + dx, c + dy


def augment_scene(scene, rng, table):
    """Rotate the whole scene by one of {0,90,180,270} degrees about the extent
    center, then jitter by (dx, dy) ~ U(0, 0.5) meters. Redraws the jitter (up
    to 10 tries) if any object center or floor vertex would leave the extent,
    then skips translation. Output is re-sorted."""
    k = int(rng.integers(0, 4))
    c = scene.extent / 2.0

    def rotate_obj(o):
        x, y = _rot90_point(o.center[0], o.center[1], k, c)
        return replace(o, center=(x, y, o.center[2]), theta=(o.theta + 90.0 * k) % 360.0)

    objects = [rotate_obj(o) for o in scene.objects]
    polygon = [_rot90_point(x, y, k, c) for x, y in scene.floor.polygon]
    doors = tuple(rotate_obj(o) for o in scene.floor.doors)
    windows = tuple(rotate_obj(o) for o in scene.floor.windows)

    shift = (0.0, 0.0)
    for _ in range(10):
        dx, dy = rng.uniform(0.0, 0.5, size=2)
        ok = all(0.0 <= o.center[0] + dx < scene.extent and 0.0 <= o.center[1] + dy < scene.extent for o in objects)
        ok = ok and all(0.0 <= x + dx <= scene.extent and 0.0 <= y + dy <= scene.extent for x, y in polygon)
        if ok:
            shift = (dx, dy)
            break

    dx, dy = shift

    def shift_obj(o):
        return replace(o, center=(o.center[0] + dx, o.center[1] + dy, o.center[2]))

    floor = FloorPlan(
        polygon=tuple((x + dx, y + dy) for x, y in polygon),
        doors=tuple(shift_obj(o) for o in doors),
        windows=tuple(shift_obj(o) for o in windows),
    )
    out = Scene(objects=tuple(shift_obj(o) for o in objects), floor=floor, extent=scene.extent)
    return sort_scene(out, table)


# -- rasterization -----------------------------------------------------------------


def rasterize_floor(polygon, resolution, extent):
    """Binary mask of a simple polygon; pixel true iff its center is inside.

    Row r spans y in [r, r+1) * extent/resolution (row 0 is y=0).
    """
    if len(polygon) < 3 or abs(polygon_area(polygon)) < 1e-9:
        raise SceneError("cannot rasterize a degenerate polygon")
    return polygon_mask(polygon, resolution, extent)


def write_pgm(mask, path):
    """Binary mask as P5 PGM, 0/255, one byte per pixel."""
    mask = np.asarray(mask)
    h, w = mask.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write((mask.astype(np.uint8) * 255).tobytes())


def read_pgm(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise SceneError(f"not a P5 PGM file: {path}")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        f.readline()  # maxval
        data = np.frombuffer(f.read(w * h), dtype=np.uint8)
    return (data.reshape(h, w) > 127)


# -- scene file schema ---------------------------------------------------------------


def _flags_for(obj, table):
    flags = []
    if table.is_door(obj.category):
        flags.append("door")
    if table.is_window(obj.category):
        flags.append("window")
    return flags


def scene_to_dict(scene, table):
    return {
        "categories": list(table.names),
        "objects": [
            {
                "category": table.name(o.category),
                "center": [round(v, 6) for v in o.center],
                "theta": round(o.theta, 6),
                "dims": [round(v, 6) for v in o.dims],
                "flags": _flags_for(o, table),
            }
            for o in scene.objects
        ],
        "floor": {"polygon": [[round(x, 6), round(y, 6)] for x, y in scene.floor.polygon]},
        "extent": scene.extent,
    }


def scene_from_dict(d, table):
    objects = []
    doors, windows = [], []
    for od in d["objects"]:
        obj = ObjectInstance(
            category=table.index(od["category"]),
            center=tuple(od["center"]),
            theta=float(od["theta"]),
            dims=tuple(od["dims"]),
        )
        objects.append(obj)
        if "door" in od.get("flags", ()):
            doors.append(obj)
        if "window" in od.get("flags", ()):
            windows.append(obj)
    floor = FloorPlan(
        polygon=tuple((float(x), float(y)) for x, y in d["floor"]["polygon"]),
        doors=tuple(doors),
        windows=tuple(windows),
    )
    return Scene(objects=tuple(objects), floor=floor, extent=float(d["extent"]))


def save_scene(scene, table, path):
    with open(path, "w") as f:
        json.dump(scene_to_dict(scene, table), f, indent=1)


def load_scene(path, table):
    with open(path) as f:
        return scene_from_dict(json.load(f), table)


# -- dataset directory -----------------------------------------------------------------


def save_dataset(scenes, table, out_dir, extra=None):
    """Directory of scene JSON files plus a manifest with category frequencies."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i, scene in enumerate(scenes):
        name = f"scene_{i:05d}.json"
        save_scene(scene, table, os.path.join(out_dir, name))
        paths.append(name)
    manifest = {"table": table.to_dict(), "scenes": paths, "count": len(paths)}
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1)


def load_dataset(in_dir):
    with open(os.path.join(in_dir, "manifest.json")) as f:
        manifest = json.load(f)
    table = CategoryTable.from_dict(manifest["table"])
    scenes = [load_scene(os.path.join(in_dir, name), table) for name in manifest["scenes"]]
    return scenes, table
