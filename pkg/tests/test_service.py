import base64
import concurrent.futures
import json

import pytest
from fastapi.testclient import TestClient

from scenegen.model import build_model_set
from scenegen.scene import scene_to_dict
from scenegen.service import create_app
from scenegen.synthetic import GeneratorConfig, make_synthetic_dataset


@pytest.fixture(scope="module")
def world():
    scenes, table = make_synthetic_dataset(GeneratorConfig(l_shape_prob=0.0), 6, seed=8)
    ms = build_model_set(len(table), mode="shape", table=table, embed_dim=32,
                         n_blocks=1, n_heads=2, floor_resolution=64, seed=2)
    app = create_app({"shape": ms}, pool_size=8)
    return scenes, table, ms, TestClient(app)


def floor_payload(scene, table):
    d = scene_to_dict(scene, table)
    doors = [o for o in d["objects"] if "door" in o["flags"]]
    windows = [o for o in d["objects"] if "window" in o["flags"]]
    return {"polygon": d["floor"]["polygon"], "doors": doors, "windows": windows,
            "extent": d["extent"]}


def test_health(world):
    _, _, _, client = world
    r = client.get("/v1/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "loaded_modes": ["shape"]}


def test_rasterize_returns_pgm(world):
    _, _, _, client = world
    r = client.post("/v1/rasterize", json={"polygon": [[1, 1], [5, 1], [5, 5], [1, 5]],
                                           "resolution": 64})
    assert r.status_code == 200
    raw = base64.b64decode(r.json()["mask_base64"])
    assert raw.startswith(b"P5\n64 64\n255\n")


def test_rasterize_degenerate_422(world):
    _, _, _, client = world
    r = client.post("/v1/rasterize", json={"polygon": [[0, 0], [1, 0], [2, 0]]})
    assert r.status_code == 422


def test_schema_violation_400_with_field_path(world):
    _, _, _, client = world
    r = client.post("/v1/rasterize", json={"polygon": "nope"})
    assert r.status_code == 400
    assert "polygon" in r.json()["detail"]


def test_generate_deterministic_per_seed(world):
    scenes, table, _, client = world
    body = {"mode": "shape", "floor": floor_payload(scenes[0], table), "seed": 33}
    a = client.post("/v1/generate", json=body)
    b = client.post("/v1/generate", json=body)
    assert a.status_code == 200
    assert a.content == b.content
    assert a.json()["seed"] == 33


def test_generate_returns_server_seed(world):
    scenes, table, _, client = world
    body = {"mode": "shape", "floor": floor_payload(scenes[0], table)}
    r = client.post("/v1/generate", json=body)
    assert r.status_code == 200
    seed = r.json()["seed"]
    replay = client.post("/v1/generate", json={**body, "seed": seed})
    assert replay.json()["scene"] == r.json()["scene"]


def test_generate_mode_mismatch_409(world):
    _, _, _, client = world
    r = client.post("/v1/generate", json={"mode": "text", "text": "a bed ."})
    assert r.status_code == 409


def test_generate_missing_floor_422(world):
    _, _, _, client = world
    r = client.post("/v1/generate", json={"mode": "shape"})
    assert r.status_code == 422


def test_complete_max_new_zero_identity(world):
    scenes, table, _, client = world
    payload = scene_to_dict(scenes[1], table)
    r = client.post("/v1/complete", json={"scene": payload, "mode": "shape",
                                          "condition": {"floor": floor_payload(scenes[1], table)},
                                          "max_new": 0, "seed": 4})
    assert r.status_code == 200
    body = r.json()
    assert body["scene"]["objects"] == payload["objects"]
    assert body["added_indices"] == []


def test_complete_appends(world):
    scenes, table, _, client = world
    payload = scene_to_dict(scenes[2], table)
    r = client.post("/v1/complete", json={"scene": payload, "mode": "shape",
                                          "condition": {"floor": floor_payload(scenes[2], table)},
                                          "max_new": 2, "seed": 5})
    assert r.status_code == 200
    body = r.json()
    n_orig = len(payload["objects"])
    assert body["scene"]["objects"][:n_orig] == payload["objects"]
    assert len(body["added_indices"]) <= 2


def test_describe(world):
    scenes, table, _, client = world
    r = client.post("/v1/describe", json={"scene": scene_to_dict(scenes[0], table), "seed": 9})
    assert r.status_code == 200
    body = r.json()
    assert body["sentences"] and body["mentioned"]


def test_checkpoint_swap_is_atomic(world):
    scenes, table, ms, client = world
    registry = client.app.state.registry
    sets, cats = registry.snapshot
    body = {"mode": "shape", "floor": floor_payload(scenes[0], table), "seed": 3}
    before = client.post("/v1/generate", json=body)
    # swap in the same models under a rebuilt registry state mid-flight
    registry.replace(sets, cats)
    after = client.post("/v1/generate", json=body)
    assert before.status_code == after.status_code == 200
    assert before.json()["scene"] == after.json()["scene"]


def test_concurrent_generation_no_state_bleed(world):
    scenes, table, _, client = world
    bodies = [{"mode": "shape", "floor": floor_payload(scenes[i % len(scenes)], table),
               "seed": 100 + i} for i in range(8)]

    def call(body):
        return client.post("/v1/generate", json=body)

    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(call, bodies))
    assert all(r.status_code == 200 for r in results)
    # replaying each request alone must give byte-identical scenes
    for body, r in zip(bodies, results):
        solo = client.post("/v1/generate", json=body)
        assert solo.json()["scene"] == r.json()["scene"]
