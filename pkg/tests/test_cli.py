import json
import os

import pytest
from click.testing import CliRunner

from scenegen.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """make-data -> tiny train -> reusable checkpoint."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    r = runner.invoke(main, ["make-data", "--n", "6", "--seed", "7",
                             "--out", str(root / "data"), "--l-shape-prob", "0"])
    assert r.exit_code == 0, r.output
    cfg = {
        "mode": "shape", "dataset": str(root / "data"), "out_dir": str(root / "ckpt"),
        "seed": 1, "steps": 4, "batch_size": 4, "augment": False,
        "embed_dim": 32, "n_blocks": 1, "n_heads": 2, "floor_resolution": 64,
    }
    (root / "desk.json").write_text(json.dumps(cfg))
    r = runner.invoke(main, ["train", "--config", str(root / "desk.json")])
    assert r.exit_code == 0, r.output
    return root, runner


def test_make_data_outputs(workspace):
    root, _ = workspace
    data = root / "data"
    assert (data / "manifest.json").exists()
    assert (data / "catalog.json").exists()
    assert (data / "embeddings.txt").exists()
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["count"] == 6
    assert len(manifest["scenes"]) == 6


def test_make_data_deterministic(tmp_path):
    runner = CliRunner()
    for sub in ("a", "b"):
        r = runner.invoke(main, ["make-data", "--n", "3", "--seed", "9",
                                 "--out", str(tmp_path / sub)])
        assert r.exit_code == 0
    a = (tmp_path / "a" / "scene_00000.json").read_text()
    b = (tmp_path / "b" / "scene_00000.json").read_text()
    assert a == b


def test_train_writes_checkpoints_and_log(workspace):
    root, _ = workspace
    ckpt = root / "ckpt"
    for kind in ("category", "orientation", "location", "dimension"):
        assert (ckpt / f"{kind}.ckpt").exists()
    assert (ckpt / "floor_encoder.ckpt").exists()
    log_lines = (ckpt / "train_log.jsonl").read_text().splitlines()
    assert len(log_lines) == 4
    entry = json.loads(log_lines[0])
    assert set(entry["losses"]) == {"category", "orientation", "location", "dimension"}


def test_run_config_roundtrip(workspace):
    root, _ = workspace
    from scenegen.cli import RunConfig

    cfg = RunConfig.load(root / "ckpt" / "run_config.json")
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_generate_and_complete_and_describe(workspace):
    root, runner = workspace
    floor_scene = str(root / "data" / "scene_00000.json")
    out = str(root / "gen.json")
    r = runner.invoke(main, ["generate", "--checkpoint", str(root / "ckpt"),
                             "--floor", floor_scene, "--seed", "1", "--out", out])
    assert r.exit_code == 0, r.output
    scene = json.loads(open(out).read())
    assert "objects" in scene and "floor" in scene
    assert os.path.exists(str(root / "gen.placed.json"))

    r = runner.invoke(main, ["complete", "--checkpoint", str(root / "ckpt"),
                             "--scene", floor_scene, "--max-new", "1",
                             "--seed", "2", "--out", str(root / "completed.json")])
    assert r.exit_code == 0, r.output

    r = runner.invoke(main, ["describe", "--scene", floor_scene, "--seed", "3"])
    assert r.exit_code == 0, r.output
    assert r.output.strip()


def test_generate_deterministic(workspace):
    root, runner = workspace
    floor_scene = str(root / "data" / "scene_00001.json")
    outs = []
    for name in ("g1.json", "g2.json"):
        r = runner.invoke(main, ["generate", "--checkpoint", str(root / "ckpt"),
                                 "--floor", floor_scene, "--seed", "5",
                                 "--out", str(root / name)])
        assert r.exit_code == 0, r.output
        outs.append((root / name).read_text())
    assert outs[0] == outs[1]


def test_describe_dataset_pairs(workspace):
    root, runner = workspace
    r = runner.invoke(main, ["describe", "--data", str(root / "data"), "--seed", "0",
                             "--out", str(root / "pairs.jsonl")])
    assert r.exit_code == 0, r.output
    lines = (root / "pairs.jsonl").read_text().splitlines()
    assert len(lines) == 6
    d = json.loads(lines[0])
    assert {"scene_path", "sentences", "mentioned", "seed"} <= set(d)


def test_eval_category_accuracy(workspace):
    root, runner = workspace
    r = runner.invoke(main, ["eval", "--metric", "category-accuracy",
                             "--pairs", str(root / "pairs.jsonl"),
                             "--data", str(root / "data")])
    assert r.exit_code == 0, r.output
    report = json.loads(r.output.strip().splitlines()[-1])
    assert report["name"] == "category_accuracy"
    assert report["value"] == 100.0  # descriptions mention real objects


def test_eval_heatmap_and_in_mask(workspace):
    root, runner = workspace
    r = runner.invoke(main, ["eval", "--metric", "heatmap", "--data", str(root / "data"),
                             "--anchor", "double_bed", "--other", "stand",
                             "--out", str(root / "hm")])
    assert r.exit_code == 0, r.output
    assert (root / "hm.pgm").exists() and (root / "hm.json").exists()

    r = runner.invoke(main, ["eval", "--metric", "in-mask", "--data", str(root / "data")])
    assert r.exit_code == 0, r.output
    report = json.loads(r.output.strip().splitlines()[-1])
    assert report["value"] == 1.0  # generator guarantees centers inside


def test_bench(workspace):
    root, runner = workspace
    r = runner.invoke(main, ["bench", "--checkpoint", str(root / "ckpt"),
                             "--floor", str(root / "data" / "scene_00000.json"),
                             "--n-runs", "2", "--seed", "0"])
    assert r.exit_code == 0, r.output
    report = json.loads(r.output.strip().splitlines()[-1])
    assert report["unit"] == "seconds" and report["sample_size"] == 2


def test_unknown_flag_exits_nonzero():
    runner = CliRunner()
    r = runner.invoke(main, ["generate", "--no-such-flag"])
    assert r.exit_code != 0


def test_error_line_on_stderr():
    runner = CliRunner()
    r = runner.invoke(main, ["train", "--data", "/nonexistent-dir-xyz", "--steps", "1"])
    assert r.exit_code == 1
    assert r.stderr.startswith("error: ")
