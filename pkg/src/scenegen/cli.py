"""Command-line entry points for the whole pipeline.

Every command is deterministic given --seed and exits nonzero with a single
"error: <reason>" line on stderr when something is wrong.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field

import click

from .assembly import Catalog, default_catalog
from .checkpoint import CheckpointError, load_model_set, save_model_set
from .metrics import (
    category_accuracy,
    in_mask_rate,
    pairwise_heatmap,
    save_heatmap,
    timing_benchmark,
)
from .model import build_model_set
from .nn import ScheduleConfig
from .pipeline import generate_and_assemble
from .sampler import complete_scene
from .scene import SceneError, load_dataset, load_scene, save_dataset, save_scene
from .synthetic import GeneratorConfig, make_synthetic_dataset
from .textgen import EmbeddingTable, generate_description, make_embedding_table, vocabulary_words
from .train import Trainer


@dataclass
class RunConfig:
    mode: str = "none"
    dataset: str = "data"
    out_dir: str = "ckpt"
    seed: int = 0
    steps: int = 2000
    batch_size: int = 32
    augment: bool = True
    embeddings: str | None = None
    embed_dim: int = 64
    n_blocks: int = 2
    n_heads: int = 4
    floor_resolution: int = 64
    max_objects: int = 50
    base_lr: float = 3e-4
    min_lr: float = 0.0
    restart_period: int = 40000
    weight_decay: float = 0.001

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise SceneError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def schedule(self):
        return ScheduleConfig(base_lr=self.base_lr, min_lr=self.min_lr,
                              restart_period=self.restart_period,
                              weight_decay=self.weight_decay)


def _fail(message):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _guard(fn):
    import functools

    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SceneError, CheckpointError, FileNotFoundError, ValueError) as e:
            _fail(e)

    return wrapped


@click.group()
def main():
    """Indoor scene generation pipeline."""


@main.command("make-data")
@click.option("--n", type=int, required=True, help="number of scenes")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--l-shape-prob", type=float, default=0.25)
@click.option("--extent", type=float, default=6.0)
@_guard
def make_data(n, seed, out_dir, l_shape_prob, extent):
    """Generate a synthetic scene dataset with manifest, catalog, embeddings."""
    cfg = GeneratorConfig(extent=extent, l_shape_prob=l_shape_prob)
    scenes, table = make_synthetic_dataset(cfg, n, seed)
    save_dataset(scenes, table, out_dir, extra={"seed": seed, "extent": extent,
                                                "generator": dataclasses.asdict(cfg)})
    default_catalog(table).save(os.path.join(out_dir, "catalog.json"))
    emb = make_embedding_table(vocabulary_words(table), dim=100, seed=seed)
    emb.save(os.path.join(out_dir, "embeddings.txt"))
    click.echo(f"wrote {n} scenes + manifest + catalog + embeddings to {out_dir}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="RunConfig JSON")
@click.option("--data", "dataset", type=click.Path(), help="dataset directory")
@click.option("--mode", type=click.Choice(["none", "shape", "text"]), default=None)
@click.option("--steps", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--print-every", type=int, default=100)
@_guard
def train(config_path, dataset, mode, steps, batch_size, seed, out_dir, print_every):
    """Train the four property models on a dataset."""
    cfg = RunConfig.load(config_path) if config_path else RunConfig()
    for name, val in (("dataset", dataset), ("mode", mode), ("steps", steps),
                      ("batch_size", batch_size), ("seed", seed), ("out_dir", out_dir)):
        if val is not None:
            setattr(cfg, name, val)
    scenes, table = load_dataset(cfg.dataset)
    with open(os.path.join(cfg.dataset, "manifest.json")) as f:
        extent = json.load(f).get("extent", 6.0)
    embeddings = None
    text_dim = 100
    if cfg.mode == "text":
        path = cfg.embeddings or os.path.join(cfg.dataset, "embeddings.txt")
        embeddings = EmbeddingTable.load(path)
        text_dim = embeddings.dim
    ms = build_model_set(len(table), mode=cfg.mode, table=table, extent=extent,
                         seed=cfg.seed, embed_dim=cfg.embed_dim, n_blocks=cfg.n_blocks,
                         n_heads=cfg.n_heads, floor_resolution=cfg.floor_resolution,
                         max_objects=cfg.max_objects, text_embed_dim=text_dim)
    ms.text_embeddings = embeddings
    trainer = Trainer(ms, scenes, schedule=cfg.schedule(), embeddings=embeddings,
                      augment=cfg.augment, seed=cfg.seed, batch_size=cfg.batch_size)
    trainer.run(cfg.steps, print_every=print_every)
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_model_set(ms, cfg.out_dir, with_optimizer=True)
    with open(os.path.join(cfg.out_dir, "train_log.jsonl"), "w") as f:
        for entry in trainer.log:
            f.write(json.dumps(entry) + "\n")
    with open(os.path.join(cfg.out_dir, "run_config.json"), "w") as f:
        json.dump(cfg.to_dict(), f, indent=1, sort_keys=True)
    if cfg.mode == "text":
        emb_out = os.path.join(cfg.out_dir, "embeddings.txt")
        embeddings.save(emb_out)
    acc = trainer.token_accuracy()
    click.echo("teacher-forced accuracy: " + " ".join(f"{k}={v:.3f}" for k, v in acc.items()))
    click.echo(f"checkpoints written to {cfg.out_dir}")


def _load_set_with_embeddings(ckpt_dir):
    ms = load_model_set(ckpt_dir)
    emb_path = os.path.join(ckpt_dir, "embeddings.txt")
    if ms.mode == "text":
        if not os.path.exists(emb_path):
            raise SceneError(f"text checkpoint {ckpt_dir} lacks embeddings.txt")
        ms.text_embeddings = EmbeddingTable.load(emb_path)
    return ms


def _catalog_for(ms, catalog_path):
    if catalog_path:
        return Catalog.load(catalog_path)
    return default_catalog(ms.table)


@main.command()
@click.option("--checkpoint", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--floor", "floor_path", type=click.Path(exists=True),
              help="scene JSON whose floor (and doors/windows) condition generation")
@click.option("--text", default=None, help="room description (text mode)")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--greedy", is_flag=True, default=False)
@_guard
def generate(ckpt_dir, floor_path, text, seed, out_path, catalog_path, greedy):
    """Generate one scene and its assembled placements."""
    ms = _load_set_with_embeddings(ckpt_dir)
    floor = None
    if floor_path:
        floor = load_scene(floor_path, ms.table).floor
    result = generate_and_assemble(ms, _catalog_for(ms, catalog_path),
                                   floor=floor, text=text, seed=seed, greedy=greedy)
    save_scene(result.scene, ms.table, out_path)
    placed_path = out_path.rsplit(".", 1)[0] + ".placed.json"
    with open(placed_path, "w") as f:
        json.dump({"placed": [dataclasses.asdict(p) for p in result.placed],
                   "warnings": result.warnings, "seed": seed}, f, indent=1)
    click.echo(f"generated {len(result.scene.objects)} objects -> {out_path}")


@main.command()
@click.option("--checkpoint", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--max-new", type=int, default=None)
@click.option("--text", default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
@_guard
def complete(ckpt_dir, scene_path, max_new, text, seed, out_path):
    """Extend a partial scene with generated objects."""
    ms = _load_set_with_embeddings(ckpt_dir)
    partial = load_scene(scene_path, ms.table)
    out, added, _ = complete_scene(ms, partial, text=text, max_new=max_new, seed=seed)
    save_scene(out, ms.table, out_path)
    click.echo(f"added {added} objects -> {out_path}")


@main.command()
@click.option("--scene", "scene_path", type=click.Path(exists=True),
              help="single scene JSON (prints sentences)")
@click.option("--data", "dataset", type=click.Path(exists=True),
              help="dataset dir (writes a pairs JSONL)")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), default=None)
@_guard
def describe(scene_path, dataset, seed, out_path):
    """Generate rule-based descriptions for a scene or a whole dataset."""
    if scene_path is None and dataset is None:
        raise SceneError("give --scene or --data")
    if scene_path:
        # a single scene needs its category table; require the manifest beside it
        manifest = os.path.join(os.path.dirname(scene_path) or ".", "manifest.json")
        if not os.path.exists(manifest):
            raise SceneError("single-scene describe needs a manifest.json beside the scene")
        from .scene import CategoryTable

        with open(manifest) as f:
            table = CategoryTable.from_dict(json.load(f)["table"])
        scene = load_scene(scene_path, table)
        desc = generate_description(scene, table, seed=seed)
        for s in desc.sentences:
            click.echo(s)
        return
    scenes, table = load_dataset(dataset)
    out_path = out_path or os.path.join(dataset, "descriptions.jsonl")
    with open(out_path, "w") as f:
        for i, scene in enumerate(scenes):
            desc = generate_description(scene, table, seed=seed + i)
            f.write(json.dumps({
                "scene_path": f"scene_{i:05d}.json",
                "sentences": list(desc.sentences),
                "mentioned": [{"category": c, "ordinal": o} for c, o in desc.mentioned],
                "seed": desc.seed,
            }) + "\n")
    click.echo(f"wrote descriptions for {len(scenes)} scenes -> {out_path}")


@main.command("eval")
@click.option("--metric", type=click.Choice(["category-accuracy", "heatmap", "in-mask"]), required=True)
@click.option("--pairs", "pairs_path", type=click.Path(exists=True), default=None,
              help="JSONL of {mentioned, scene_path} for category-accuracy")
@click.option("--data", "dataset", type=click.Path(exists=True), default=None)
@click.option("--anchor", default="double_bed")
@click.option("--other", default="stand")
@click.option("--bins", type=int, default=64)
@click.option("--range-m", type=float, default=3.0)
@click.option("--out", "out_path", type=click.Path(), default=None)
@_guard
def eval_cmd(metric, pairs_path, dataset, anchor, other, bins, range_m, out_path):
    """Compute a metric and print a JSON report line."""
    from .metrics import MetricReport, config_hash

    if metric == "category-accuracy":
        if pairs_path is None or dataset is None:
            raise SceneError("category-accuracy needs --pairs and --data")
        scenes, table = load_dataset(dataset)
        by_name = {f"scene_{i:05d}.json": s for i, s in enumerate(scenes)}
        pairs = []
        with open(pairs_path) as f:
            for line in f:
                d = json.loads(line)
                mentioned = [m["category"] for m in d["mentioned"]]
                pairs.append((mentioned, by_name[d["scene_path"]]))
        pct, n, warnings = category_accuracy(pairs, table)
        report = MetricReport(name="category_accuracy", value=pct, sample_size=n,
                              config_hash=config_hash({"pairs": pairs_path}),
                              extra={"warnings": warnings})
    elif metric == "heatmap":
        if dataset is None:
            raise SceneError("heatmap needs --data")
        scenes, table = load_dataset(dataset)
        hm = pairwise_heatmap(scenes, table, anchor, other, bins=bins, range_m=range_m)
        if out_path:
            save_heatmap(hm, out_path)
        report = MetricReport(name=f"heatmap_{anchor}_{other}", value=float(hm.samples),
                              sample_size=hm.samples,
                              config_hash=config_hash({"bins": bins, "range": range_m}),
                              extra={"dropped": hm.dropped})
    else:
        if dataset is None:
            raise SceneError("in-mask needs --data")
        scenes, table = load_dataset(dataset)
        rate = in_mask_rate(scenes, table)
        report = MetricReport(name="in_mask_rate", value=rate, sample_size=len(scenes),
                              config_hash=config_hash({"data": dataset}))
    click.echo(report.to_json())


@main.command()
@click.option("--checkpoint", "ckpt_dir", required=True, type=click.Path(exists=True))
@click.option("--floor", "floor_path", type=click.Path(exists=True), default=None)
@click.option("--text", default=None)
@click.option("--n-runs", type=int, default=5)
@click.option("--seed", type=int, default=0)
@_guard
def bench(ckpt_dir, floor_path, text, n_runs, seed):
    """Time full scene generation (tokens + assembly)."""
    ms = _load_set_with_embeddings(ckpt_dir)
    floor = load_scene(floor_path, ms.table).floor if floor_path else None
    catalog = default_catalog(ms.table)
    counter = [0]

    def run_once():
        counter[0] += 1
        generate_and_assemble(ms, catalog, floor=floor, text=text, seed=seed + counter[0])

    report = timing_benchmark(run_once, n_runs,
                              config={"checkpoint": ckpt_dir, "mode": ms.mode})
    click.echo(report.to_json())


@main.command()
@click.option("--checkpoint", "ckpt_dirs", multiple=True, required=True,
              type=click.Path(exists=True), help="repeatable: one per conditioning mode")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8040)
@click.option("--pool-size", type=int, default=4)
@_guard
def serve(ckpt_dirs, host, port, pool_size):
    """Run the HTTP generation service."""
    import uvicorn

    from .service import create_app

    model_sets = {}
    for d in ckpt_dirs:
        ms = _load_set_with_embeddings(d)
        model_sets[ms.mode] = ms
    app = create_app(model_sets, pool_size=pool_size)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
