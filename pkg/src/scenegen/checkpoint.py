"""Binary checkpoint format and model-set persistence.

Layout: magic, format version, canonical-JSON metadata (config, optional rng
state and per-parameter step counts), named float32 tensor blocks
(little-endian), trailing CRC32 over everything before it. Loads are all-or-
nothing: version mismatch, truncation, and checksum failure each raise.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .model import ModelSet, TransformerConfig
from .scene import CategoryTable

MAGIC = b"SGCK"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: dict
    tensors: dict
    step_counts: dict = field(default_factory=dict)
    rng_state: dict | None = None


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def save_checkpoint(ckpt, path):
    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", FORMAT_VERSION)
    meta = _canonical_json({
        "config": ckpt.config,
        "step_counts": ckpt.step_counts,
        "rng_state": ckpt.rng_state,
    })
    body += struct.pack("<I", len(meta)) + meta
    body += struct.pack("<I", len(ckpt.tensors))
    for name in sorted(ckpt.tensors):
        arr = np.ascontiguousarray(ckpt.tensors[name], dtype="<f4")
        nb = name.encode()
        body += struct.pack("<H", len(nb)) + nb
        body += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
        body += arr.tobytes()
    crc = zlib.crc32(bytes(body))
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(bytes(body) + struct.pack("<I", crc))
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise CheckpointError(f"not a checkpoint file: {path}")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    body = raw[:-4]
    if zlib.crc32(body) != stored_crc:
        raise CheckpointError(f"checksum mismatch (corrupt or truncated): {path}")
    off = 4
    version = struct.unpack_from("<I", body, off)[0]
    off += 4
    if version != FORMAT_VERSION:
        raise CheckpointError(f"incompatible checkpoint version {version} (expected {FORMAT_VERSION})")
    try:
        meta_len = struct.unpack_from("<I", body, off)[0]
        off += 4
        meta = json.loads(body[off:off + meta_len])
        off += meta_len
        n_tensors = struct.unpack_from("<I", body, off)[0]
        off += 4
        tensors = {}
        for _ in range(n_tensors):
            name_len = struct.unpack_from("<H", body, off)[0]
            off += 2
            name = body[off:off + name_len].decode()
            off += name_len
            ndim = struct.unpack_from("<B", body, off)[0]
            off += 1
            shape = struct.unpack_from(f"<{ndim}I", body, off)
            off += 4 * ndim
            count = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(body, dtype="<f4", count=count, offset=off).reshape(shape)
            off += 4 * count
            tensors[name] = arr.copy()
    except (struct.error, ValueError, UnicodeDecodeError) as e:
        raise CheckpointError(f"malformed checkpoint {path}: {e}") from e
    return Checkpoint(
        config=meta["config"],
        tensors=tensors,
        step_counts=meta.get("step_counts") or {},
        rng_state=meta.get("rng_state"),
    )


# -- module-level snapshot helpers ----------------------------------------------


def module_checkpoint(module, config, with_optimizer=False, rng_state=None):
    tensors = dict(module.state_arrays())
    steps = {}
    if with_optimizer:
        for name, p in module.named_parameters():
            tensors[f"{name}.adam_m"] = p.adam_m
            tensors[f"{name}.adam_v"] = p.adam_v
            steps[name] = p.step_count
    return Checkpoint(config=config, tensors=tensors, step_counts=steps, rng_state=rng_state)


def restore_module(module, ckpt):
    params = dict(module.named_parameters())
    plain = {k: v for k, v in ckpt.tensors.items() if not k.endswith((".adam_m", ".adam_v"))}
    module.load_state_arrays(plain)
    for name, p in params.items():
        if f"{name}.adam_m" in ckpt.tensors:
            p.adam_m = ckpt.tensors[f"{name}.adam_m"].astype(np.float32).copy()
            p.adam_v = ckpt.tensors[f"{name}.adam_v"].astype(np.float32).copy()
            p.step_count = int(ckpt.step_counts.get(name, 0))


# -- whole model set ---------------------------------------------------------------


def save_model_set(ms, out_dir, with_optimizer=False):
    os.makedirs(out_dir, exist_ok=True)
    for kind, model in ms.models.items():
        ckpt = module_checkpoint(model, model.config.to_dict(), with_optimizer)
        save_checkpoint(ckpt, os.path.join(out_dir, f"{kind}.ckpt"))
    if ms.floor_encoder is not None:
        enc = module_checkpoint(ms.floor_encoder,
                                {"embed_dim": ms.floor_encoder.embed_dim,
                                 "resolution": ms.floor_encoder.resolution},
                                with_optimizer)
        save_checkpoint(enc, os.path.join(out_dir, "floor_encoder.ckpt"))
    if ms.text_conditioner is not None:
        enc = module_checkpoint(ms.text_conditioner,
                                {"embed_dim": ms.text_conditioner.w2.weight.tensor.shape[1],
                                 "text_dim": ms.text_conditioner.text_dim},
                                with_optimizer)
        save_checkpoint(enc, os.path.join(out_dir, "text_conditioner.ckpt"))
    meta = {
        "format_version": FORMAT_VERSION,
        "mode": ms.mode,
        "extent": ms.extent,
        "table": ms.table.to_dict() if ms.table else None,
    }
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(meta, f, indent=1)


def load_model_set(in_dir):
    with open(os.path.join(in_dir, "meta.json")) as f:
        meta = json.load(f)
    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"incompatible model-set version in {in_dir}")
    table = CategoryTable.from_dict(meta["table"]) if meta.get("table") else None
    configs = {}
    ckpts = {}
    for kind in ("category", "orientation", "location", "dimension"):
        ckpt = load_checkpoint(os.path.join(in_dir, f"{kind}.ckpt"))
        configs[kind] = TransformerConfig.from_dict(ckpt.config)
        ckpts[kind] = ckpt
    ms = ModelSet(configs, rng=np.random.default_rng(0), table=table, extent=meta["extent"])
    for kind, model in ms.models.items():
        restore_module(model, ckpts[kind])
    if ms.floor_encoder is not None:
        restore_module(ms.floor_encoder, load_checkpoint(os.path.join(in_dir, "floor_encoder.ckpt")))
    if ms.text_conditioner is not None:
        restore_module(ms.text_conditioner, load_checkpoint(os.path.join(in_dir, "text_conditioner.ckpt")))
    return ms
