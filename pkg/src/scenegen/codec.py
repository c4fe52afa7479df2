"""Scenes to token sequences and back, plus per-model aligned input streams.

Eight sequences per scene (c, x, y, z, theta, l, w, h), each framed by START
and STOP. The location and dimension models consume their three sequences
interleaved one object at a time ((x1,y1,z1),(x2,y2,z2),... ), with START and
STOP occupying one full triple slot; every scalar sequence fed to them is
repeated three times so slots line up. Conditioning streams carrying the
CURRENT object's already-generated properties are shifted left by one token
relative to the model's own stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scene import (
    MAX_OBJECTS,
    FloorPlan,
    ObjectInstance,
    Scene,
    SceneError,
    dequantize_value,
    is_sorted,
    quantize_value,
)

SEQ_NAMES = ("c", "x", "y", "z", "theta", "l", "w", "h")
KIND_OF_SEQ = {
    "c": "category",
    "x": "location",
    "y": "location",
    "z": "location",
    "theta": "orientation",
    "l": "dimension",
    "w": "dimension",
    "h": "dimension",
}
MODEL_KINDS = ("category", "orientation", "location", "dimension")
TRIPLE_SEQS = {"location": ("x", "y", "z"), "dimension": ("l", "w", "h")}


class CodecError(SceneError):
    pass


@dataclass(frozen=True)
class TokenLayout:
    value_range: int

    @property
    def start(self):
        return self.value_range

    @property
    def stop(self):
        return self.value_range + 1

    @property
    def pad(self):
        return self.value_range + 2

    @property
    def vocab_size(self):
        return self.value_range + 3


@dataclass(frozen=True)
class TokenVocab:
    """Token id layout for all four sequence kinds given the category count."""

    n_categories: int

    def layout(self, kind):
        if kind == "category":
            return TokenLayout(self.n_categories)
        if kind == "orientation":
            return TokenLayout(360)
        if kind in ("location", "dimension"):
            return TokenLayout(256)
        raise CodecError(f"unknown sequence kind {kind!r}")

    def vocab_size(self, kind):
        return self.layout(kind).vocab_size


@dataclass
class SequenceBundle:
    """Raw token values per sequence (specials excluded), door/window prefix
    length, and whether STOP has been reached."""

    vocab: TokenVocab
    tokens: dict = field(default_factory=lambda: {name: [] for name in SEQ_NAMES})
    prefix: int = 0
    closed: bool = False

    @property
    def n_objects(self):
        return len(self.tokens["c"])

    def copy(self):
        return SequenceBundle(
            vocab=self.vocab,
            tokens={k: list(v) for k, v in self.tokens.items()},
            prefix=self.prefix,
            closed=self.closed,
        )

    def append(self, name, token):
        if self.closed:
            raise CodecError("cannot append to a closed bundle")
        layout = self.vocab.layout(KIND_OF_SEQ[name])
        if not 0 <= token < layout.value_range:
            raise CodecError(f"token {token} out of range for sequence {name!r}")
        self.tokens[name].append(int(token))

    def full_sequence(self, name):
        """[START, values..., STOP-if-closed] for one sequence."""
        layout = self.vocab.layout(KIND_OF_SEQ[name])
        seq = [layout.start] + list(self.tokens[name])
        if self.closed:
            seq.append(layout.stop)
        return seq

    def padded_sequences(self, pad_to=None):
        """All 8 sequences with specials, PAD-padded to a common object count."""
        if not self.closed:
            raise CodecError("padded_sequences requires a closed bundle")
        n = self.n_objects
        width = pad_to if pad_to is not None else n + 2
        if width < n + 2:
            raise CodecError(f"pad_to {width} shorter than sequence {n + 2}")
        out = {}
        for name in SEQ_NAMES:
            layout = self.vocab.layout(KIND_OF_SEQ[name])
            seq = self.full_sequence(name)
            out[name] = seq + [layout.pad] * (width - len(seq))
        return out

    def dump(self):
        """Debug form: one line per sequence, space-separated token ids."""
        seqs = self.padded_sequences()
        return "\n".join(f"{name} " + " ".join(str(t) for t in seqs[name]) for name in SEQ_NAMES)


def encode_scene(scene, table, vocab=None):
    """Quantize a sorted scene into its 8 token sequences."""
    if vocab is None:
        vocab = TokenVocab(len(table))
    if not is_sorted(scene, table):
        raise CodecError("scene must be sorted before encoding")
    if len(scene.objects) > MAX_OBJECTS:
        raise CodecError(f"scene exceeds {MAX_OBJECTS} objects")
    bundle = SequenceBundle(vocab=vocab)
    for o in scene.objects:
        bundle.append("c", o.category)
        bundle.append("x", quantize_value(o.center[0], "location", scene.extent))
        bundle.append("y", quantize_value(o.center[1], "location", scene.extent))
        bundle.append("z", quantize_value(o.center[2], "location", scene.extent))
        bundle.append("theta", quantize_value(o.theta, "orientation"))
        bundle.append("l", quantize_value(o.dims[0], "dimension", scene.extent))
        bundle.append("w", quantize_value(o.dims[1], "dimension", scene.extent))
        bundle.append("h", quantize_value(o.dims[2], "dimension", scene.extent))
    bundle.prefix = sum(1 for o in scene.objects if table.is_door(o.category) or table.is_window(o.category))
    bundle.closed = True
    return bundle


def decode_bundle(sequences, table, extent, floor=None, vocab=None):
    """Rebuild a (quantized-precision) scene from 8 full sequences with specials.

    STOP must sit at a consistent index across all sequences. The floor is not
    encoded in the tokens; pass one or get a full-extent square."""
    if vocab is None:
        vocab = TokenVocab(len(table))
    counts = {}
    for name in SEQ_NAMES:
        layout = vocab.layout(KIND_OF_SEQ[name])
        seq = list(sequences[name])
        if not seq or seq[0] != layout.start:
            raise CodecError(f"sequence {name!r} must begin with START")
        body = seq[1:]
        if layout.stop not in body:
            raise CodecError(f"sequence {name!r} has no STOP")
        n = body.index(layout.stop)
        for t in body[:n]:
            if not 0 <= t < layout.value_range:
                raise CodecError(f"sequence {name!r} carries out-of-range token {t}")
        for t in body[n + 1:]:
            if t != layout.pad:
                raise CodecError(f"sequence {name!r} carries non-PAD token after STOP")
        counts[name] = n
    n = counts["c"]
    if any(v != n for v in counts.values()):
        raise CodecError(f"malformed bundle: inconsistent STOP indices {counts}")
    objects = []
    for i in range(n):
        objects.append(ObjectInstance(
            category=sequences["c"][1 + i],
            center=(
                dequantize_value(sequences["x"][1 + i], "location", extent),
                dequantize_value(sequences["y"][1 + i], "location", extent),
                dequantize_value(sequences["z"][1 + i], "location", extent),
            ),
            theta=dequantize_value(sequences["theta"][1 + i], "orientation"),
            dims=(
                dequantize_value(sequences["l"][1 + i], "dimension", extent),
                dequantize_value(sequences["w"][1 + i], "dimension", extent),
                dequantize_value(sequences["h"][1 + i], "dimension", extent),
            ),
        ))
    if floor is None:
        floor = FloorPlan(polygon=((0.0, 0.0), (extent, 0.0), (extent, extent), (0.0, extent)))
    doors = tuple(o for o in objects if table.is_door(o.category))
    windows = tuple(o for o in objects if table.is_window(o.category))
    if doors or windows:
        floor = FloorPlan(polygon=floor.polygon, doors=doors, windows=windows)
    return Scene(objects=tuple(objects), floor=floor, extent=extent)


def decode_scene(bundle, table, extent, floor=None):
    return decode_bundle(bundle.padded_sequences(), table, extent, floor=floor, vocab=bundle.vocab)


# -- model input assembly ---------------------------------------------------------


@dataclass
class ModelInput:
    """Aligned integer streams for one property model.

    values: stream name -> token ids, all of equal length T. 'own' is the
    model's autoregressive stream; the rest are current-object conditioning
    (already shifted left by one). positions index the OBJECT slot, not the
    flat position; coord_types cycle 0,1,2 for the interleaved models.
    targets/loss_mask are present only for closed bundles (training)."""

    kind: str
    values: dict
    positions: np.ndarray
    coord_types: np.ndarray | None
    targets: np.ndarray | None
    loss_mask: np.ndarray | None
    valid_len: int


# conditioning streams per model kind, in embedding-sum order
AUX_STREAMS = {
    "category": (),
    "orientation": ("category",),
    "location": ("category", "orientation"),
    "dimension": ("category", "orientation", "location"),
}


def _own_values(bundle, kind):
    if kind == "category":
        return list(bundle.tokens["c"])
    if kind == "orientation":
        return list(bundle.tokens["theta"])
    names = TRIPLE_SEQS[kind]
    out = []
    for i in range(len(bundle.tokens[names[2]])):
        out.extend(bundle.tokens[n][i] for n in names)
    # a partially generated triple (x done, y pending) spills its known tokens
    done = len(bundle.tokens[names[2]])
    for n in names:
        if len(bundle.tokens[n]) > done:
            out.append(bundle.tokens[n][done])
    return out


def _aux_full(bundle, stream, repeat):
    """[START*r, values (each r times), STOP*r] for a conditioning stream."""
    if stream == "category":
        kind, values = "category", [(t,) * repeat for t in bundle.tokens["c"]]
    elif stream == "orientation":
        kind, values = "orientation", [(t,) * repeat for t in bundle.tokens["theta"]]
    elif stream == "location":
        kind = "location"
        names = TRIPLE_SEQS["location"]
        values = []
        n_full = min(len(bundle.tokens[n]) for n in names)
        for i in range(n_full):
            values.append(tuple(bundle.tokens[n][i] for n in names))
        tail = tuple(
            bundle.tokens[n][n_full] for n in names if len(bundle.tokens[n]) > n_full
        )
        if tail:
            values.append(tail)
    else:
        raise CodecError(f"unknown aux stream {stream!r}")
    layout = bundle.vocab.layout(kind)
    flat = [layout.start] * repeat
    for group in values:
        flat.extend(group)
    if bundle.closed:
        flat.extend([layout.stop] * repeat)
    return flat, layout


def build_model_input(bundle, kind, pad_to=None):
    """Assemble the aligned streams one property model consumes.

    Closed bundle: teacher-forcing mode, returns targets and a loss mask that
    skips PAD, START fillers, and the door/window prefix. Open bundle:
    generation mode, the next-token logits live at the last valid slot."""
    if kind not in MODEL_KINDS:
        raise CodecError(f"unknown model kind {kind!r}")
    triple = kind in TRIPLE_SEQS
    repeat = 3 if triple else 1
    own_kind = kind
    own_layout = bundle.vocab.layout(own_kind)

    own_vals = _own_values(bundle, kind)
    own_full = [own_layout.start] * repeat + own_vals
    if bundle.closed:
        own_full += [own_layout.stop] * repeat
        input_ids = own_full[:-1]
        targets = own_full[1:]
    else:
        input_ids = own_full
        targets = None
    t_len = len(input_ids)

    values = {"own": np.asarray(input_ids, dtype=np.int64)}
    for stream in AUX_STREAMS[kind]:
        flat, layout = _aux_full(bundle, stream, repeat)
        shifted = flat[1:1 + t_len]
        if len(shifted) < t_len:
            raise CodecError(f"aux stream {stream!r} too short for {kind} input")
        values[stream] = np.asarray(shifted, dtype=np.int64)

    positions = np.arange(t_len, dtype=np.int64) // repeat
    coord_types = (np.arange(t_len, dtype=np.int64) % 3) if triple else None

    loss_mask = None
    if bundle.closed:
        targets = np.asarray(targets, dtype=np.int64)
        target_obj = (np.arange(t_len, dtype=np.int64) + 1) // repeat
        loss_mask = (targets != own_layout.start)
        loss_mask &= ~((target_obj >= 1) & (target_obj <= bundle.prefix))

    mi = ModelInput(
        kind=kind,
        values=values,
        positions=positions,
        coord_types=coord_types,
        targets=targets if bundle.closed else None,
        loss_mask=loss_mask,
        valid_len=t_len,
    )
    if pad_to is not None:
        _pad_input(mi, pad_to, bundle.vocab)
    return mi


def _pad_input(mi, pad_to, vocab):
    t = mi.valid_len
    if pad_to < t:
        raise CodecError(f"pad_to {pad_to} shorter than stream length {t}")
    extra = pad_to - t
    if extra == 0:
        return
    stream_kind = {"own": mi.kind, "category": "category", "orientation": "orientation", "location": "location"}
    for name, arr in mi.values.items():
        pad_id = vocab.layout(stream_kind[name]).pad
        mi.values[name] = np.concatenate([arr, np.full(extra, pad_id, dtype=np.int64)])
    mi.positions = np.concatenate([mi.positions, np.zeros(extra, dtype=np.int64)])
    if mi.coord_types is not None:
        mi.coord_types = np.concatenate([mi.coord_types, np.zeros(extra, dtype=np.int64)])
    if mi.targets is not None:
        own_pad = vocab.layout(mi.kind).pad
        mi.targets = np.concatenate([mi.targets, np.full(extra, own_pad, dtype=np.int64)])
        mi.loss_mask = np.concatenate([mi.loss_mask, np.zeros(extra, dtype=bool)])


def stream_length(kind, n_objects):
    """Input stream length for a complete scene with n objects."""
    repeat = 3 if kind in TRIPLE_SEQS else 1
    return repeat * (n_objects + 2) - 1
