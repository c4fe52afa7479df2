"""Procedural bedroom generator standing in for real training data.

Placement rules (all checked by tests, so treat them as contracts):
  - one door and one window, each centered on a wall segment
  - a double bed with its head against a wall, facing into the room
  - night stands flanking the bed head (centers within 0.5 m of the bed's
    head face) when present
  - a television on the wall opposite the bed, facing it
  - wardrobe / desk+chair / dresser / bookshelf along free walls
  - ceiling lamp near the room center at ceiling height; table lamp on top
    of a stand; rug / plant / sofa / ottoman as floor fillers
  - every object center lies inside the floor polygon
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import (
    CategoryTable,
    FloorPlan,
    ObjectInstance,
    Scene,
    SceneError,
    point_in_polygon,
    sort_scene,
)

CATEGORY_NAMES = (
    "door", "window", "double_bed", "stand", "wardrobe", "television",
    "desk", "chair", "ceiling_lamp", "table_lamp", "plant", "rug",
    "dresser", "bookshelf", "sofa", "ottoman",
)

# low-frequency fillers enabled by GeneratorConfig.extended_vocab; placement
# kind: how the generator drops them in
EXTRA_CATEGORIES = (
    ("armchair", "floor"), ("mirror", "wall"), ("heater", "wall"),
    ("wall_lamp", "wall"), ("curtain", "wall"), ("coffee_table", "floor"),
    ("shoe_cabinet", "wall"), ("bunk_bed", "floor"), ("dressing_table", "wall"),
    ("fishtank", "floor"), ("ceiling_fan", "ceiling"), ("air_conditioner", "wall"),
)
EXTRA_CATEGORY_NAMES = tuple(name for name, _ in EXTRA_CATEGORIES)

# canonical (l, w, h) per category; l is depth along the facing axis
BASE_DIMS = {
    "door": (0.15, 0.9, 2.0),
    "window": (0.15, 1.2, 1.2),
    "double_bed": (2.0, 1.6, 0.5),
    "stand": (0.45, 0.45, 0.55),
    "wardrobe": (0.6, 1.5, 2.0),
    "television": (0.15, 1.1, 0.65),
    "desk": (0.6, 1.2, 0.75),
    "chair": (0.5, 0.5, 0.9),
    "ceiling_lamp": (0.4, 0.4, 0.3),
    "table_lamp": (0.3, 0.3, 0.45),
    "plant": (0.4, 0.4, 1.1),
    "rug": (1.6, 2.2, 0.02),
    "dresser": (0.5, 1.2, 0.8),
    "bookshelf": (0.35, 0.9, 1.8),
    "sofa": (0.9, 1.8, 0.8),
    "ottoman": (0.6, 0.6, 0.4),
    "armchair": (0.8, 0.8, 0.9),
    "mirror": (0.1, 0.6, 1.4),
    "heater": (0.2, 0.8, 0.6),
    "wall_lamp": (0.2, 0.25, 0.35),
    "curtain": (0.15, 1.4, 2.2),
    "coffee_table": (0.6, 1.0, 0.45),
    "shoe_cabinet": (0.35, 0.9, 1.0),
    "bunk_bed": (2.0, 1.0, 1.7),
    "dressing_table": (0.45, 1.0, 1.4),
    "fishtank": (0.4, 0.8, 0.7),
    "ceiling_fan": (1.2, 1.2, 0.4),
    "air_conditioner": (0.25, 0.9, 0.35),
}


@dataclass(frozen=True)
class GeneratorConfig:
    extent: float = 6.0
    room_min: float = 3.6
    room_max: float = 5.5
    l_shape_prob: float = 0.25
    stand_prob: float = 0.85
    television_prob: float = 0.7
    wardrobe_prob: float = 0.8
    desk_prob: float = 0.5
    ceiling_lamp_prob: float = 0.6
    table_lamp_prob: float = 0.5
    plant_prob: float = 0.4
    rug_prob: float = 0.35
    dresser_prob: float = 0.3
    bookshelf_prob: float = 0.25
    sofa_prob: float = 0.2
    ottoman_prob: float = 0.15
    ceiling_height: float = 2.6
    extended_vocab: bool = False  # add the 12 low-frequency filler categories
    extra_prob: float = 0.18

    def __post_init__(self):
        if self.room_min < 3.0:
            raise SceneError("rooms below 3 m cannot hold the mandatory bed layout")
        if self.room_max > self.extent - 0.2:
            raise SceneError("room_max leaves no placement margin inside the extent")

    @property
    def category_names(self):
        if self.extended_vocab:
            return CATEGORY_NAMES + EXTRA_CATEGORY_NAMES
        return CATEGORY_NAMES


def category_table(counts=None, names=CATEGORY_NAMES):
    freqs = tuple(counts.get(n, 0) for n in names) if counts else tuple([0] * len(names))
    return CategoryTable(names=names, frequencies=freqs)


# wall ids: 0=south (y=y0), 1=east, 2=north, 3=west; normal points into the room
_WALL_NORMALS = {0: (0.0, 1.0), 1: (-1.0, 0.0), 2: (0.0, -1.0), 3: (1.0, 0.0)}
_WALL_THETA = {0: 90.0, 1: 180.0, 2: 270.0, 3: 0.0}  # facing into the room


def _jitter_dims(name, rng):
    l, w, h = BASE_DIMS[name]
    s = rng.uniform(0.92, 1.08)
    return (round(l * s, 4), round(w * s, 4), round(h * (1.0 if name == "rug" else s), 4))


class _RoomBuilder:
    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.names = cfg.category_names
        self.rng = rng
        w = rng.uniform(cfg.room_min, cfg.room_max)
        h = rng.uniform(cfg.room_min, cfg.room_max)
        x0 = rng.uniform(0.1, cfg.extent - w - 0.1)
        y0 = rng.uniform(0.1, cfg.extent - h - 0.1)
        self.rect = (x0, y0, x0 + w, y0 + h)
        self.polygon = self._make_polygon()
        self.objects = []
        self.wall_spans = {i: [] for i in range(4)}  # claimed intervals per wall

    def _make_polygon(self):
        x0, y0, x1, y1 = self.rect
        if self.rng.random() >= self.cfg.l_shape_prob:
            return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
        # cut one corner quadrant to get an L-shape (counter-clockwise)
        cw = (x1 - x0) * self.rng.uniform(0.25, 0.4)
        ch = (y1 - y0) * self.rng.uniform(0.25, 0.4)
        corner = int(self.rng.integers(0, 4))
        if corner == 0:  # cut (x0, y0)
            return ((x0 + cw, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0 + ch), (x0 + cw, y0 + ch))
        if corner == 1:  # cut (x1, y0)
            return ((x0, y0), (x1 - cw, y0), (x1 - cw, y0 + ch), (x1, y0 + ch), (x1, y1), (x0, y1))
        if corner == 2:  # cut (x1, y1)
            return ((x0, y0), (x1, y0), (x1, y1 - ch), (x1 - cw, y1 - ch), (x1 - cw, y1), (x0, y1))
        return ((x0, y0), (x1, y0), (x1, y1), (x0 + cw, y1), (x0 + cw, y1 - ch), (x0, y1 - ch))

    def _wall_point(self, wall, t):
        """Point at parameter t in [0,1] along the wall of the bounding rect."""
        x0, y0, x1, y1 = self.rect
        if wall == 0:
            return (x0 + t * (x1 - x0), y0)
        if wall == 1:
            return (x1, y0 + t * (y1 - y0))
        if wall == 2:
            return (x1 - t * (x1 - x0), y1)
        return (x0, y1 - t * (y1 - y0))

    def _wall_len(self, wall):
        x0, y0, x1, y1 = self.rect
        return (x1 - x0) if wall in (0, 2) else (y1 - y0)

    def _claim(self, wall, t, width):
        half = width / (2.0 * self._wall_len(wall))
        for lo, hi in self.wall_spans[wall]:
            if t - half < hi and t + half > lo:
                return False
        self.wall_spans[wall].append((t - half, t + half))
        return True

    def _inside(self, x, y, margin=0.05):
        x0, y0, x1, y1 = self.rect
        if not (x0 + margin <= x <= x1 - margin and y0 + margin <= y <= y1 - margin):
            return False
        return point_in_polygon(x, y, self.polygon)

    def _on_wall(self, name, wall, t, inset, z, dims):
        """Object centered inset meters inside the wall at parameter t, facing in."""
        wx, wy = self._wall_point(wall, t)
        nx, ny = _WALL_NORMALS[wall]
        x, y = wx + nx * inset, wy + ny * inset
        if not self._inside(x, y, margin=0.0):
            return None
        return ObjectInstance(
            category=self.names.index(name),
            center=(round(x, 4), round(y, 4), round(z, 4)),
            theta=_WALL_THETA[wall],
            dims=dims,
        )

    def place_wall_object(self, name, wall, dims, z=None, tries=8, in_wall=False):
        margin = dims[1] / (2.0 * self._wall_len(wall)) + 0.02
        for _ in range(tries):
            t = self.rng.uniform(margin, 1.0 - margin)
            # in-wall objects keep their outer face flush with the wall; the
            # center must still land strictly inside the polygon
            inset = dims[0] / 2.0 + (0.01 if in_wall else 0.02)
            obj = self._on_wall(name, wall, t, inset, z if z is not None else dims[2] / 2.0, dims)
            if obj is not None and self._claim(wall, t, dims[1] + 0.1):
                self.objects.append(obj)
                return obj, t
        return None, None

    def place_floor_object(self, name, dims, near=None, z=None, tries=12):
        x0, y0, x1, y1 = self.rect
        for _ in range(tries):
            if near is not None:
                x = near[0] + self.rng.uniform(-0.6, 0.6)
                y = near[1] + self.rng.uniform(-0.6, 0.6)
            else:
                x = self.rng.uniform(x0 + 0.4, x1 - 0.4)
                y = self.rng.uniform(y0 + 0.4, y1 - 0.4)
            if not self._inside(x, y, margin=0.2):
                continue
            obj = ObjectInstance(
                category=self.names.index(name),
                center=(round(x, 4), round(y, 4), round(z if z is not None else dims[2] / 2.0, 4)),
                theta=float(self.rng.integers(0, 4) * 90),
                dims=dims,
            )
            self.objects.append(obj)
            return obj
        return None


def _facing_vec(theta):
    r = math.radians(theta)
    return (math.cos(r), math.sin(r))


def generate_scene(cfg, rng):
    """One scene per the module's placement rules; raises if the bed cannot fit."""
    b = _RoomBuilder(cfg, rng)

    door_wall = int(rng.integers(0, 4))
    door, _ = b.place_wall_object("door", door_wall, _jitter_dims("door", rng), z=1.0, in_wall=True)
    window_wall = (door_wall + int(rng.integers(1, 4))) % 4
    window, _ = b.place_wall_object("window", window_wall, _jitter_dims("window", rng), z=1.4, in_wall=True)

    bed = None
    for wall in rng.permutation(4):
        wall = int(wall)
        dims = _jitter_dims("double_bed", rng)
        bed, bed_t = b.place_wall_object("double_bed", wall, dims, tries=10)
        if bed is not None:
            bed_wall = wall
            break
    if bed is None:
        raise SceneError("unsatisfiable generator config: no wall can hold the bed")

    # stands flank the bed head (the face against the wall)
    if rng.random() < cfg.stand_prob:
        fx, fy = _facing_vec(bed.theta)
        lx, ly = -fy, fx  # lateral axis
        sd = _jitter_dims("stand", rng)
        head = (bed.center[0] - fx * (bed.dims[0] / 2 - sd[0] / 2),
                bed.center[1] - fy * (bed.dims[0] / 2 - sd[0] / 2))
        off = bed.dims[1] / 2 + sd[1] / 2 + 0.05
        for side in (-1.0, 1.0):
            x, y = head[0] + side * lx * off, head[1] + side * ly * off
            if b._inside(x, y, margin=0.0):
                b.objects.append(ObjectInstance(
                    category=CATEGORY_NAMES.index("stand"),
                    center=(round(x, 4), round(y, 4), round(sd[2] / 2, 4)),
                    theta=bed.theta, dims=sd))

    if rng.random() < cfg.television_prob:
        tv_wall = (bed_wall + 2) % 4
        b.place_wall_object("television", tv_wall, _jitter_dims("television", rng), z=1.2, in_wall=True)

    free_walls = [w for w in range(4) if w not in (bed_wall,)]
    if rng.random() < cfg.wardrobe_prob:
        b.place_wall_object("wardrobe", int(rng.choice(free_walls)), _jitter_dims("wardrobe", rng))

    if rng.random() < cfg.desk_prob:
        desk, _ = b.place_wall_object("desk", int(rng.choice(free_walls)), _jitter_dims("desk", rng))
        if desk is not None:
            fx, fy = _facing_vec(desk.theta)
            cd = _jitter_dims("chair", rng)
            cx, cy = desk.center[0] + fx * 0.7, desk.center[1] + fy * 0.7
            if b._inside(cx, cy, margin=0.1):
                b.objects.append(ObjectInstance(
                    category=CATEGORY_NAMES.index("chair"),
                    center=(round(cx, 4), round(cy, 4), round(cd[2] / 2, 4)),
                    theta=(desk.theta + 180.0) % 360.0, dims=cd))

    if rng.random() < cfg.dresser_prob:
        b.place_wall_object("dresser", int(rng.choice(free_walls)), _jitter_dims("dresser", rng))
    if rng.random() < cfg.bookshelf_prob:
        b.place_wall_object("bookshelf", int(rng.choice(free_walls)), _jitter_dims("bookshelf", rng))

    if rng.random() < cfg.ceiling_lamp_prob:
        x0, y0, x1, y1 = b.rect
        ld = _jitter_dims("ceiling_lamp", rng)
        cx = (x0 + x1) / 2 + rng.uniform(-0.3, 0.3)
        cy = (y0 + y1) / 2 + rng.uniform(-0.3, 0.3)
        if b._inside(cx, cy, margin=0.1):
            b.objects.append(ObjectInstance(
                category=CATEGORY_NAMES.index("ceiling_lamp"),
                center=(round(cx, 4), round(cy, 4), round(cfg.ceiling_height - ld[2] / 2, 4)),
                theta=0.0, dims=ld))

    stands = [o for o in b.objects if b.names[o.category] == "stand"]
    if stands and rng.random() < cfg.table_lamp_prob:
        s = stands[int(rng.integers(0, len(stands)))]
        ld = _jitter_dims("table_lamp", rng)
        b.objects.append(ObjectInstance(
            category=CATEGORY_NAMES.index("table_lamp"),
            center=(s.center[0], s.center[1], round(s.dims[2] + ld[2] / 2, 4)),
            theta=s.theta, dims=ld))

    if rng.random() < cfg.plant_prob:
        x0, y0, x1, y1 = b.rect
        corners = [(x0 + 0.4, y0 + 0.4), (x1 - 0.4, y0 + 0.4), (x1 - 0.4, y1 - 0.4), (x0 + 0.4, y1 - 0.4)]
        cx, cy = corners[int(rng.integers(0, 4))]
        pd = _jitter_dims("plant", rng)
        if b._inside(cx, cy, margin=0.1):
            b.objects.append(ObjectInstance(
                category=CATEGORY_NAMES.index("plant"),
                center=(round(cx, 4), round(cy, 4), round(pd[2] / 2, 4)),
                theta=0.0, dims=pd))

    if rng.random() < cfg.rug_prob:
        b.place_floor_object("rug", _jitter_dims("rug", rng), z=0.01)
    if rng.random() < cfg.sofa_prob:
        b.place_floor_object("sofa", _jitter_dims("sofa", rng))
    if rng.random() < cfg.ottoman_prob:
        b.place_floor_object("ottoman", _jitter_dims("ottoman", rng))

    if cfg.extended_vocab:
        x0, y0, x1, y1 = b.rect
        for name, kind in EXTRA_CATEGORIES:
            if rng.random() >= cfg.extra_prob:
                continue
            dims = _jitter_dims(name, rng)
            if kind == "wall":
                z = {"mirror": 1.1, "wall_lamp": 1.7, "air_conditioner": 2.2,
                     "curtain": 1.4, "heater": 0.4}.get(name)
                b.place_wall_object(name, int(rng.integers(0, 4)), dims, z=z,
                                    in_wall=name in ("curtain", "air_conditioner", "wall_lamp", "mirror"))
            elif kind == "ceiling":
                cx = (x0 + x1) / 2 + rng.uniform(-0.5, 0.5)
                cy = (y0 + y1) / 2 + rng.uniform(-0.5, 0.5)
                if b._inside(cx, cy, margin=0.1):
                    b.objects.append(ObjectInstance(
                        category=b.names.index(name),
                        center=(round(cx, 4), round(cy, 4),
                                round(cfg.ceiling_height - dims[2] / 2, 4)),
                        theta=0.0, dims=dims))
            else:
                b.place_floor_object(name, dims)

    doors = tuple(o for o in b.objects if b.names[o.category] == "door")
    windows = tuple(o for o in b.objects if b.names[o.category] == "window")
    floor = FloorPlan(polygon=b.polygon, doors=doors, windows=windows)
    return Scene(objects=tuple(b.objects), floor=floor, extent=cfg.extent)


def make_synthetic_dataset(cfg, n, seed):
    """n scenes, deterministic per seed (per-scene RNGs via SeedSequence.spawn).

    Returns (scenes, table); scenes come back sorted against the returned
    table, whose frequencies are the actual category counts in the dataset.
    """
    if n < 1:
        raise SceneError("need n >= 1")
    children = np.random.SeedSequence(seed).spawn(n)
    scenes = [generate_scene(cfg, np.random.default_rng(child)) for child in children]

    names = cfg.category_names
    counts = {}
    for s in scenes:
        for o in s.objects:
            counts[names[o.category]] = counts.get(names[o.category], 0) + 1
    table = category_table(counts, names=names)
    return [sort_scene(s, table) for s in scenes], table
