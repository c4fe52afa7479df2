"""HTTP generation service for the interactive studio.

Stateless JSON endpoints under /v1. Scene payloads use the scene-data file
schema. Every response that involved sampling carries the seed that produced
it so the client can replay any result. A bounded worker pool sheds load with
503; checkpoint registries swap atomically so concurrent requests never see a
half-loaded model.
"""

from __future__ import annotations

import base64
import dataclasses
import io
import secrets
import threading

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .assembly import default_catalog
from .codec import CodecError
from .pipeline import assemble_existing, generate_and_assemble
from .sampler import complete_scene
from .scene import FloorPlan, SceneError, rasterize_floor, scene_from_dict, scene_to_dict, sort_scene
from .textgen import generate_description


class RasterizeRequest(BaseModel):
    polygon: list = Field(min_length=3)
    resolution: int = 256


class GenerateRequest(BaseModel):
    mode: str
    floor: dict | None = None
    text: str | None = None
    seed: int | None = None
    max_objects: int | None = None


class CompleteRequest(BaseModel):
    scene: dict
    mode: str
    condition: dict | None = None
    max_new: int | None = None
    seed: int | None = None


class DescribeRequest(BaseModel):
    scene: dict
    seed: int | None = None


class _Registry:
    """Holds the live model sets; swaps are atomic reference replacements."""

    def __init__(self, model_sets, catalogs):
        self._lock = threading.Lock()
        self._state = (dict(model_sets), dict(catalogs))

    @property
    def snapshot(self):
        return self._state

    def replace(self, model_sets, catalogs):
        with self._lock:
            self._state = (dict(model_sets), dict(catalogs))


def _floor_from_payload(payload, table):
    try:
        polygon = tuple((float(x), float(y)) for x, y in payload["polygon"])
        doors, windows = [], []
        scene_like = {"objects": payload.get("doors", []) + payload.get("windows", []),
                      "floor": {"polygon": [list(p) for p in polygon]},
                      "extent": payload.get("extent", 6.0)}
        parsed = scene_from_dict(scene_like, table)
        return FloorPlan(polygon=polygon, doors=parsed.floor.doors, windows=parsed.floor.windows)
    except (KeyError, TypeError) as e:
        raise HTTPException(status_code=400, detail=f"floor: {e}")


def _pgm_bytes(mask):
    h, w = mask.shape
    return f"P5\n{w} {h}\n255\n".encode() + (mask.astype(np.uint8) * 255).tobytes()


def create_app(model_sets, catalogs=None, pool_size=4):
    if catalogs is None:
        catalogs = {mode: default_catalog(ms.table) for mode, ms in model_sets.items()}
    registry = _Registry(model_sets, catalogs)
    pool = threading.Semaphore(pool_size)

    app = FastAPI(title="scenegen service", version="1")
    app.state.registry = registry
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def schema_errors(request: Request, exc: RequestValidationError):
        first = exc.errors()[0]
        path = ".".join(str(p) for p in first["loc"] if p != "body")
        return JSONResponse(status_code=400,
                            content={"detail": f"{path}: {first['msg']}"})

    def _model_set(mode):
        sets, cats = registry.snapshot
        if mode not in sets:
            raise HTTPException(status_code=409,
                                detail=f"no checkpoint loaded for mode {mode!r}; "
                                       f"available: {sorted(sets)}")
        return sets[mode], cats[mode]

    def _seeded(seed):
        return int(seed) if seed is not None else secrets.randbits(31)

    def _bounded(fn):
        if not pool.acquire(blocking=False):
            raise HTTPException(status_code=503, detail="generation pool saturated")
        try:
            return fn()
        finally:
            pool.release()

    @app.get("/v1/health")
    def health():
        sets, _ = registry.snapshot
        return {"status": "ok", "loaded_modes": sorted(sets)}

    @app.post("/v1/rasterize")
    def rasterize(req: RasterizeRequest):
        try:
            mask = rasterize_floor(tuple((float(x), float(y)) for x, y in req.polygon),
                                   req.resolution, extent=_any_extent())
        except (SceneError, TypeError, ValueError) as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"mask_base64": base64.b64encode(_pgm_bytes(mask)).decode(),
                "resolution": req.resolution}

    def _any_extent():
        sets, _ = registry.snapshot
        return next(iter(sets.values())).extent if sets else 6.0

    @app.post("/v1/generate")
    def generate(req: GenerateRequest):
        ms, catalog = _model_set(req.mode)
        seed = _seeded(req.seed)
        floor = _floor_from_payload(req.floor, ms.table) if req.floor else None
        if req.mode == "shape" and floor is None:
            raise HTTPException(status_code=422, detail="shape mode needs a floor")
        if req.mode == "text" and not req.text:
            raise HTTPException(status_code=422, detail="text mode needs text")

        def work():
            try:
                return generate_and_assemble(ms, catalog, floor=floor, text=req.text,
                                             seed=seed, max_objects=req.max_objects)
            except (SceneError, CodecError) as e:
                raise HTTPException(status_code=422, detail=str(e))

        result = _bounded(work)
        return {
            "scene": scene_to_dict(result.scene, ms.table),
            "placed_objects": [dataclasses.asdict(p) for p in result.placed],
            "warnings": result.warnings,
            "seed": seed,
        }

    @app.post("/v1/complete")
    def complete(req: CompleteRequest):
        ms, catalog = _model_set(req.mode)
        seed = _seeded(req.seed)
        condition = req.condition or {}
        try:
            partial = scene_from_dict(req.scene, ms.table)
            partial = sort_scene(partial, ms.table)
        except (SceneError, KeyError, TypeError) as e:
            raise HTTPException(status_code=400, detail=f"scene: {e}")
        floor = (_floor_from_payload(condition["floor"], ms.table)
                 if condition.get("floor") else None)
        text = condition.get("text")

        def work():
            try:
                out, added, _ = complete_scene(ms, partial, floor=floor, text=text,
                                               max_new=req.max_new, seed=seed)
                return out, added
            except (SceneError, CodecError) as e:
                raise HTTPException(status_code=422, detail=str(e))

        out, added = _bounded(work)
        # originals stay verbatim; only the generated suffix is decoded tokens
        orig = req.scene.get("objects", [])
        merged = dict(scene_to_dict(out, ms.table))
        merged["objects"] = orig + merged["objects"][len(orig):]
        placed, warnings = assemble_existing(out, catalog, ms.table)
        return {
            "scene": merged,
            "added_indices": list(range(len(orig), len(orig) + added)),
            "placed_objects": [dataclasses.asdict(p) for p in placed],
            "warnings": warnings,
            "seed": seed,
        }

    @app.post("/v1/describe")
    def describe(req: DescribeRequest):
        sets, _ = registry.snapshot
        ms = next(iter(sets.values()), None)
        if ms is None:
            raise HTTPException(status_code=409, detail="no checkpoint loaded")
        seed = _seeded(req.seed)
        try:
            scene = sort_scene(scene_from_dict(req.scene, ms.table), ms.table)
            desc = generate_description(scene, ms.table, seed=seed)
        except (SceneError, KeyError, ValueError) as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"sentences": list(desc.sentences),
                "mentioned": [{"category": c, "ordinal": o} for c, o in desc.mentioned],
                "seed": seed}

    return app
