"""Placing generated objects as catalog boxes: nearest-size retrieval,
oriented-box IoU, and the bounded rank/resample insertion loop.

Placed objects keep the predicted center and orientation but take the
catalog entry's dimensions. Two objects may coexist when their 3D IoU stays
at or below the overlap ceiling; doors and windows are exempt (they live in
walls)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .kernels import convex_clip_area
from .scene import SceneError

IOU_LIMIT = 0.05
MAX_RETRIEVAL_RANK = 20


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    category: str
    dims: tuple
    tags: tuple = ()

    def __post_init__(self):
        if any(d <= 0 for d in self.dims):
            raise SceneError(f"catalog entry {self.id}: dimensions must be positive")


@dataclass(frozen=True)
class PlacedObject:
    catalog_id: str
    category: str
    center: tuple
    theta: float
    dims: tuple  # catalog dims, not the predicted ones
    is_fixture: bool = False  # doors/windows

    def footprint(self):
        return box_footprint(self.center[0], self.center[1], self.dims[0], self.dims[1], self.theta)


@dataclass(frozen=True)
class ResampleRequest:
    index: int
    category: str
    reason: str = "no catalog entry fits without collision"


def box_footprint(cx, cy, l, w, theta_deg):
    """CCW corners of the rotated footprint rectangle."""
    r = math.radians(theta_deg)
    c, s = math.cos(r), math.sin(r)
    hx, hy = l / 2.0, w / 2.0
    return np.array([
        (cx + c * dx - s * dy, cy + s * dx + c * dy)
        for dx, dy in ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy))
    ])


def oriented_iou(a, b):
    """3D IoU of two vertical-axis-oriented boxes: footprint polygon
    intersection area times the vertical interval overlap."""
    inter_area = convex_clip_area(a.footprint(), b.footprint())
    za = (a.center[2] - a.dims[2] / 2.0, a.center[2] + a.dims[2] / 2.0)
    zb = (b.center[2] - b.dims[2] / 2.0, b.center[2] + b.dims[2] / 2.0)
    overlap = max(0.0, min(za[1], zb[1]) - max(zb[0], za[0]))
    inter = inter_area * overlap
    va = a.dims[0] * a.dims[1] * a.dims[2]
    vb = b.dims[0] * b.dims[1] * b.dims[2]
    union = va + vb - inter
    return inter / union if union > 0 else 0.0


class Catalog:
    def __init__(self, entries):
        self.entries = list(entries)
        self._by_category = {}
        for e in self.entries:
            self._by_category.setdefault(e.category, []).append(e)

    def __len__(self):
        return len(self.entries)

    def of_category(self, name):
        return self._by_category.get(name, [])

    def to_json(self):
        return [{"id": e.id, "category": e.category, "dims": list(e.dims)} for e in self.entries]

    @classmethod
    def from_json(cls, data):
        return cls(CatalogEntry(id=d["id"], category=d["category"], dims=tuple(d["dims"])) for d in data)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(json.load(f))


def retrieve_cad(predicted_dims, category, catalog, rank=0):
    """rank-th nearest catalog entry of the category by L2 over (l, w, h);
    ties break on id."""
    entries = catalog.of_category(category)
    if not entries:
        raise SceneError(f"catalog has no entries for category {category!r}")
    if not 0 <= rank < len(entries):
        raise SceneError(f"rank {rank} out of range for {category!r} ({len(entries)} entries)")
    pd = np.asarray(predicted_dims, dtype=np.float64)
    ordered = sorted(entries, key=lambda e: (float(np.linalg.norm(np.asarray(e.dims) - pd)), e.id))
    return ordered[rank]


def insert_objects(predicted, catalog, table, existing=(), iou_limit=IOU_LIMIT,
                   max_rank=MAX_RETRIEVAL_RANK):
    """Try catalog ranks 0..19 per object, accepting the first placement whose
    IoU against everything already placed stays within the limit; emit a
    resample request after exhausting the ranks.

    predicted: ObjectInstance list in generation order. Returns
    (placed, requests)."""
    placed = list(existing)
    out = []
    requests = []
    for idx, obj in enumerate(predicted):
        name = table.name(obj.category)
        fixture = table.is_door(obj.category) or table.is_window(obj.category)
        n_ranks = min(max_rank, len(catalog.of_category(name)))
        if n_ranks == 0:
            raise SceneError(f"catalog has no entries for category {name!r}")
        chosen = None
        for rank in range(1 if fixture else n_ranks):
            entry = retrieve_cad(obj.dims, name, catalog, rank)
            candidate = PlacedObject(
                catalog_id=entry.id, category=name, center=obj.center,
                theta=obj.theta, dims=entry.dims, is_fixture=fixture,
            )
            if fixture or _fits(candidate, placed, iou_limit):
                chosen = candidate
                break
        if chosen is None:
            requests.append(ResampleRequest(index=idx, category=name))
        else:
            placed.append(chosen)
            out.append(chosen)
    return out, requests


def _fits(candidate, placed, iou_limit):
    for other in placed:
        if other.is_fixture:
            continue
        if oriented_iou(candidate, other) > iou_limit:
            return False
    return True


def verify_placements(placed, iou_limit=IOU_LIMIT):
    """Re-check every pair; returns the list of violations (should be empty)."""
    bad = []
    for i in range(len(placed)):
        for j in range(i + 1, len(placed)):
            if placed[i].is_fixture or placed[j].is_fixture:
                continue
            v = oriented_iou(placed[i], placed[j])
            if v > iou_limit:
                bad.append((i, j, v))
    return bad


def build_catalog(table, base_dims, seed=0, per_category=8, jitter=0.12):
    """Box stand-ins for CAD models: per category, jittered copies of its
    canonical dims so retrieval ranks are meaningful."""
    rng = np.random.default_rng(seed)
    entries = []
    for name in table.names:
        base = np.asarray(base_dims.get(name, (0.5, 0.5, 0.5)), dtype=np.float64)
        for k in range(per_category):
            scale = 1.0 + rng.uniform(-jitter, jitter, size=3)
            dims = tuple(np.round(base * scale, 4))
            entries.append(CatalogEntry(id=f"{name}_{k:02d}", category=name, dims=dims))
    return Catalog(entries)


def default_catalog(table, seed=7):
    from .synthetic import BASE_DIMS

    return build_catalog(table, BASE_DIMS, seed=seed)
