"""Teacher-forced training for the four property models.

Each model is trained independently with cross entropy over its own stream;
the shared conditioning encoder (floor CNN or text MLP) gets a fresh forward
per model so its parameters receive each loss's gradients. Everything is
seed-deterministic: batch choice, augmentation, and per-step description
regeneration all derive from SeedSequence((seed, pool, step, ...)).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import nn
from .codec import MODEL_KINDS, TokenVocab, _pad_input, build_model_input, encode_scene
from .nn import ScheduleConfig, adam_step, lr_at, no_grad
from .scene import Scene, augment_scene
from .textgen import generate_description, tokenize


class TrainingDiverged(RuntimeError):
    pass


def strip_doors_windows(scene, table):
    objs = tuple(o for o in scene.objects
                 if not table.is_door(o.category) and not table.is_window(o.category))
    return Scene(objects=objs, floor=scene.floor, extent=scene.extent)


@dataclass
class _Prepared:
    bundle: object
    mask: np.ndarray | None = None
    text_vectors: np.ndarray | None = None
    text_mask: np.ndarray | None = None


class Trainer:
    def __init__(self, model_set, scenes, schedule=None, embeddings=None,
                 augment=True, seed=0, batch_size=128, p_desc=0.7):
        self.ms = model_set
        self.table = model_set.table
        self.schedule = schedule or ScheduleConfig()
        self.embeddings = embeddings
        self.augment = augment
        self.seed = seed
        self.batch_size = batch_size
        self.p_desc = p_desc
        self.vocab = TokenVocab(len(self.table))
        self.mode = model_set.mode
        if self.mode == "text" and embeddings is None:
            raise ValueError("text mode needs an embedding table")
        if self.mode == "shape":
            self.scenes = list(scenes)
        else:
            self.scenes = [strip_doors_windows(s, self.table) for s in scenes]
        if not self.scenes:
            raise ValueError("empty dataset")
        self.log = []
        self._step = 0

    # -- per-scene preparation ----------------------------------------------

    def _rng(self, pool, *key):
        return np.random.default_rng(np.random.SeedSequence((self.seed, pool, *key)))

    def _prepare(self, scene, step, idx):
        if self.augment:
            scene = augment_scene(scene, self._rng(1, step, idx), self.table)
        prepped = _Prepared(bundle=encode_scene(scene, self.table, self.vocab))
        if self.mode == "shape":
            res = next(iter(self.ms.configs.values())).floor_resolution
            prepped.mask = scene.floor.mask(res, scene.extent)
        elif self.mode == "text":
            desc_seed = int(self._rng(2, step, idx).integers(0, 2 ** 31))
            desc = generate_description(scene, self.table, seed=desc_seed, p_desc=self.p_desc)
            tokens = tokenize(desc.text, max_sentences=3)
            vectors = [self.embeddings.vector(t) for t in tokens]
            prepped.text_vectors, prepped.text_mask = self.ms.text_conditioner.prepare(vectors)
        return prepped

    # -- batching --------------------------------------------------------------

    def _stack_inputs(self, batch, kind):
        inputs = [build_model_input(p.bundle, kind) for p in batch]
        pad_to = max(mi.valid_len for mi in inputs)
        for mi in inputs:
            _pad_input(mi, pad_to, self.vocab)
        values = {
            name: np.stack([mi.values[name] for mi in inputs])
            for name in inputs[0].values
        }
        positions = np.stack([mi.positions for mi in inputs])
        coord = np.stack([mi.coord_types for mi in inputs]) if inputs[0].coord_types is not None else None
        targets = np.stack([mi.targets for mi in inputs])
        mask = np.stack([mi.loss_mask for mi in inputs])
        return values, positions, coord, targets, mask

    def _encode_memory(self, batch):
        """One conditioning forward per step; returns (graph root, mask)."""
        if self.mode == "shape":
            masks = np.stack([p.mask for p in batch])
            return self.ms.floor_encoder(masks), None
        if self.mode == "text":
            vectors = np.stack([p.text_vectors for p in batch])
            tmask = np.stack([p.text_mask for p in batch])
            memory, _ = self.ms.text_conditioner(vectors, tmask)
            return memory, tmask
        return None, None

    def _loss_for(self, batch, kind, memory=None, memory_mask=None):
        values, positions, coord, targets, mask = self._stack_inputs(batch, kind)
        if not self.ms[kind].config.cross_attention:
            memory, memory_mask = None, None
        logits = self.ms[kind].forward(values, positions, coord_types=coord,
                                       memory=memory, memory_mask=memory_mask)
        b, t, v = logits.shape
        flat = nn.reshape(logits, (b * t, v))
        pad_id = self.vocab.layout(kind).pad
        flat_targets = np.where(mask, targets, pad_id).reshape(-1)
        return nn.cross_entropy(flat, flat_targets, ignore_id=pad_id)

    # -- the loop -----------------------------------------------------------------

    def step(self):
        i = self._step
        rng = self._rng(0, i)
        n = len(self.scenes)
        size = min(self.batch_size, n)
        idxs = rng.choice(n, size=size, replace=self.batch_size > n)
        batch = [self._prepare(self.scenes[j], i, int(j)) for j in idxs]
        lr = lr_at(i, self.schedule)
        losses = {}
        mem_graph, memory_mask = self._encode_memory(batch)
        mem_leaf = None
        if mem_graph is not None:
            # detach: models see a leaf; its accumulated grad later seeds one
            # backward pass through the encoder for this step's joint update
            mem_leaf = nn.Tensor(mem_graph.data, requires_grad=True)
        for kind in MODEL_KINDS:
            loss = self._loss_for(batch, kind, memory=mem_leaf, memory_mask=memory_mask)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingDiverged(f"step {i}: {kind} loss is {value} at lr {lr:.2e}")
            loss.backward()
            adam_step(self.ms[kind].parameters(), lr, self.schedule.weight_decay)
            losses[kind] = value
        if mem_leaf is not None and mem_leaf.grad is not None:
            mem_graph.backward(mem_leaf.grad)
            adam_step(self.ms.encoder_parameters(), lr, self.schedule.weight_decay)
        self._step += 1
        entry = {"step": i, "lr": lr, "losses": losses}
        self.log.append(entry)
        return entry

    def run(self, steps, print_every=None):
        t0 = time.time()
        for _ in range(steps):
            entry = self.step()
            if print_every and entry["step"] % print_every == 0:
                parts = " ".join(f"{k[:3]}={v:.3f}" for k, v in entry["losses"].items())
                print(f"step {entry['step']:5d} lr {entry['lr']:.2e} {parts} "
                      f"({time.time() - t0:.0f}s)", flush=True)
        return self.log

    # -- evaluation ------------------------------------------------------------------

    def token_accuracy(self, scenes=None, desc_seed_base=10_000):
        """Teacher-forced argmax accuracy per model over loss-counted positions."""
        scenes = self.scenes if scenes is None else (
            scenes if self.mode == "shape" else [strip_doors_windows(s, self.table) for s in scenes]
        )
        correct = {k: 0 for k in MODEL_KINDS}
        total = {k: 0 for k in MODEL_KINDS}
        saved_aug, self.augment = self.augment, False
        try:
            batch = [self._prepare(s, desc_seed_base, j) for j, s in enumerate(scenes)]
        finally:
            self.augment = saved_aug
        with no_grad():
            memory, memory_mask = self._encode_memory(batch)
            for kind in MODEL_KINDS:
                values, positions, coord, targets, mask = self._stack_inputs(batch, kind)
                mem = memory if self.ms[kind].config.cross_attention else None
                mmask = memory_mask if self.ms[kind].config.cross_attention else None
                logits = self.ms[kind].forward(values, positions, coord_types=coord,
                                               memory=mem, memory_mask=mmask)
                pred = logits.data.argmax(axis=-1)
                correct[kind] += int(((pred == targets) & mask).sum())
                total[kind] += int(mask.sum())
        return {k: correct[k] / max(1, total[k]) for k in MODEL_KINDS}


def train(model_set, scenes, schedule=None, steps=1000, batch_size=128, seed=0,
          augment=True, embeddings=None, print_every=None, p_desc=0.7):
    """Convenience wrapper: build a Trainer, run, return (trainer, log)."""
    trainer = Trainer(model_set, scenes, schedule=schedule, embeddings=embeddings,
                      augment=augment, seed=seed, batch_size=batch_size, p_desc=p_desc)
    log = trainer.run(steps, print_every=print_every)
    return trainer, log
