"""Quantitative evaluation: relative-location heatmaps, description/scene
category accuracy with its two reference samplers, in-mask rate, and a wall
clock timing harness."""

from __future__ import annotations

import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from .scene import MAX_OBJECTS

HEATMAP_BINS = 64
HEATMAP_RANGE_M = 3.0


@dataclass
class Heatmap:
    anchor: str
    other: str
    grid: np.ndarray  # [bins, bins] counts; row ~ y, col ~ x in the anchor frame
    samples: int
    dropped: int
    bins: int
    range_m: float

    def normalized(self):
        peak = self.grid.max()
        return self.grid / peak if peak > 0 else self.grid.astype(float)


@dataclass
class MetricReport:
    name: str
    value: float
    sample_size: int
    config_hash: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"metric {self.name}: value must be finite")

    def to_json(self):
        return json.dumps({"name": self.name, "value": self.value,
                           "sample_size": self.sample_size,
                           "config_hash": self.config_hash, **self.extra})


def config_hash(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:12]


def pairwise_heatmap(scenes, table, anchor_cat, other_cat, bins=HEATMAP_BINS,
                     range_m=HEATMAP_RANGE_M):
    """Bin the other object's center in the anchor's canonical frame
    (translate to the anchor, rotate by -theta_anchor)."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    a_idx, o_idx = table.index(anchor_cat), table.index(other_cat)
    grid = np.zeros((bins, bins), dtype=np.int64)
    dropped = 0
    for scene in scenes:
        anchors = [o for o in scene.objects if o.category == a_idx]
        others = [o for o in scene.objects if o.category == o_idx]
        for a in anchors:
            r = math.radians(a.theta)
            c, s = math.cos(r), math.sin(r)
            for o in others:
                if o is a:
                    continue
                dx, dy = o.center[0] - a.center[0], o.center[1] - a.center[1]
                lx, ly = c * dx + s * dy, -s * dx + c * dy
                if abs(lx) >= range_m or abs(ly) >= range_m:
                    dropped += 1
                    continue
                col = int((lx + range_m) / (2 * range_m) * bins)
                row = int((ly + range_m) / (2 * range_m) * bins)
                grid[min(row, bins - 1), min(col, bins - 1)] += 1
    return Heatmap(anchor=anchor_cat, other=other_cat, grid=grid,
                   samples=int(grid.sum()), dropped=dropped, bins=bins, range_m=range_m)


def save_heatmap(hm, path_prefix):
    """PGM of normalized counts plus a JSON sidecar with the parameters."""
    img = (hm.normalized() * 255).astype(np.uint8)
    with open(f"{path_prefix}.pgm", "wb") as f:
        f.write(f"P5\n{hm.bins} {hm.bins}\n255\n".encode())
        f.write(img.tobytes())
    with open(f"{path_prefix}.json", "w") as f:
        json.dump({"anchor": hm.anchor, "other": hm.other, "bins": hm.bins,
                   "range_m": hm.range_m, "samples": hm.samples,
                   "dropped": hm.dropped}, f, indent=1)


# -- category accuracy ----------------------------------------------------------


def category_accuracy(pairs, table):
    """pairs: (mentioned category-name multiset or Description, generated Scene).

    Multiset semantics: two mentioned beds need two generated beds. Pairs with
    nothing mentioned are skipped. Returns (percentage, n_scored, warnings)."""
    scores = []
    warnings = []
    for k, (mentioned, scene) in enumerate(pairs):
        if hasattr(mentioned, "mentioned"):
            names = [name for name, _ in mentioned.mentioned]
        else:
            names = list(mentioned)
        if not names:
            warnings.append(f"pair {k}: empty mentioned set, skipped")
            continue
        have = {}
        for o in scene.objects:
            name = table.name(o.category)
            have[name] = have.get(name, 0) + 1
        hit = 0
        need = {}
        for name in names:
            need[name] = need.get(name, 0) + 1
        for name, count in need.items():
            hit += min(count, have.get(name, 0))
        scores.append(hit / len(names))
    if not scores:
        raise ValueError("category_accuracy: nothing to score")
    return 100.0 * float(np.mean(scores)), len(scores), warnings


def baseline_sampler(kind, table, rng, max_objects=MAX_OBJECTS):
    """Reference category sequences: 'uniform' draws evenly over all
    categories plus stop; 'gt_frequency' draws by training frequency with the
    stop token weighted at the mean category frequency."""
    if len(table) == 0:
        raise ValueError("empty category table")
    n = len(table)
    if kind == "uniform":
        weights = np.ones(n + 1)
    elif kind == "gt_frequency":
        freqs = np.asarray(table.frequencies, dtype=np.float64)
        weights = np.concatenate([freqs, [freqs.mean()]])
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    probs = weights / weights.sum()
    out = []
    while len(out) < max_objects:
        draw = int(rng.choice(n + 1, p=probs))
        if draw == n:  # stop token
            break
        out.append(draw)
    return out


# -- geometry rates ---------------------------------------------------------------


def in_mask_rate(scenes, table, resolution=256, include_fixtures=False):
    """Fraction of object centers that land on a true pixel of their scene's
    floor mask."""
    inside = 0
    total = 0
    for scene in scenes:
        mask = scene.floor.mask(resolution, scene.extent)
        for o in scene.objects:
            if not include_fixtures and (table.is_door(o.category) or table.is_window(o.category)):
                continue
            col = int(o.center[0] / scene.extent * resolution)
            row = int(o.center[1] / scene.extent * resolution)
            total += 1
            if 0 <= row < resolution and 0 <= col < resolution and mask[row, col]:
                inside += 1
    return inside / total if total else 0.0


# -- timing --------------------------------------------------------------------------


def timing_benchmark(run_once, n_runs, name="scene_generation", config=None):
    """Wall-clock seconds per call of run_once (a zero-arg callable)."""
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        run_once()
        times.append(time.perf_counter() - t0)
    mean = float(np.mean(times))
    sd = float(np.std(times)) if n_runs > 1 else 0.0
    return MetricReport(
        name=name, value=mean, sample_size=n_runs,
        config_hash=config_hash(config or {}),
        extra={"sd": sd, "unit": "seconds",
               "hardware": platform.processor() or platform.machine(),
               "note": "single-process CPU walltime; not comparable to GPU numbers"},
    )
