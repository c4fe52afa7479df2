"""The four property transformers and their conditioning encoders.

Each property model is an independent decoder stack (pre-norm blocks: causal
self-attention, optional cross-attention to a conditioning memory, then a
feed-forward gate) over summed value/object-position/coordinate-type
embeddings, closed by a linear head over its token vocabulary.

Conditioning routing: in shape mode all four models cross-attend to the
shared floor-encoder memory; in text mode only the category and location
models cross-attend, the other two run as plain decoders.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import nn
from .codec import AUX_STREAMS, MODEL_KINDS, TRIPLE_SEQS, TokenVocab
from .nn import Embedding, LayerNorm, Linear, Module, Parameter
from .nn.tensor import Tensor, add, conv2d, dropout, gelu, reshape, scaled_dot_product_attention, transpose

CONDITIONING_MODES = ("none", "shape", "text")
# text conditioning feeds only these two decoders; the rest ignore it
TEXT_CROSS_KINDS = ("category", "location")
MAX_TEXT_TOKENS = 40


@dataclass
class TransformerConfig:
    kind: str
    n_categories: int
    embed_dim: int = 256
    n_heads: int = 8
    n_blocks: int = 8
    max_objects: int = 50
    conditioning: str = "none"
    text_embed_dim: int = 100
    floor_resolution: int = 512
    dropout: float = 0.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.conditioning not in CONDITIONING_MODES:
            raise ValueError(f"unknown conditioning mode {self.conditioning!r}")
        if self.embed_dim % self.n_heads:
            raise ValueError("embed_dim must divide evenly across heads")

    @property
    def triple(self):
        return self.kind in TRIPLE_SEQS

    @property
    def cross_attention(self):
        if self.conditioning == "shape":
            return True
        if self.conditioning == "text":
            return self.kind in TEXT_CROSS_KINDS
        return False

    @property
    def max_stream_len(self):
        r = 3 if self.triple else 1
        return r * (self.max_objects + 2) - 1

    def vocab(self):
        return TokenVocab(self.n_categories)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def paper_config(kind, n_categories, conditioning="shape"):
    """Full-scale hyperparameters: E=256 (1024 for location), 8 heads, 8 blocks."""
    e = 1024 if kind == "location" else 256
    return TransformerConfig(kind=kind, n_categories=n_categories, embed_dim=e,
                             n_heads=8, n_blocks=8, conditioning=conditioning)


def desk_config(kind, n_categories, conditioning="none", embed_dim=64, n_blocks=2,
                n_heads=4, floor_resolution=64, max_objects=50, text_embed_dim=100):
    return TransformerConfig(kind=kind, n_categories=n_categories, embed_dim=embed_dim,
                             n_heads=n_heads, n_blocks=n_blocks, conditioning=conditioning,
                             floor_resolution=floor_resolution, max_objects=max_objects,
                             text_embed_dim=text_embed_dim)


class SelfAttention(Module):
    """Multi-head attention; kv_dim differs from dim when attending to a
    conditioning memory of another width."""

    def __init__(self, dim, n_heads, rng, kv_dim=None):
        kv_dim = kv_dim or dim
        self.wq = Linear(dim, dim, rng)
        self.wk = Linear(kv_dim, dim, rng)
        self.wv = Linear(kv_dim, dim, rng)
        self.wo = Linear(dim, dim, rng)
        self.n_heads = n_heads
        self.head_dim = dim // n_heads

    def _split(self, t):
        b, s, _ = t.shape
        return transpose(reshape(t, (b, s, self.n_heads, self.head_dim)), (0, 2, 1, 3))

    def __call__(self, x, kv, mask):
        b, tq, dim = x.shape
        q, k, v = self._split(self.wq(x)), self._split(self.wk(kv)), self._split(self.wv(kv))
        out = scaled_dot_product_attention(q, k, v, mask)
        out = reshape(transpose(out, (0, 2, 1, 3)), (b, tq, dim))
        return self.wo(out)


class FeedForward(Module):
    def __init__(self, dim, hidden, rng):
        self.w1 = Linear(dim, hidden, rng)
        self.w2 = Linear(hidden, dim, rng)

    def __call__(self, x):
        return self.w2(gelu(self.w1(x)))


class DecoderBlock(Module):
    def __init__(self, dim, n_heads, rng, cross=False, memory_dim=None):
        self.ln1 = LayerNorm(dim)
        self.attn = SelfAttention(dim, n_heads, rng)
        if cross:
            self.ln_x = LayerNorm(dim)
            self.cross = SelfAttention(dim, n_heads, rng, kv_dim=memory_dim)
        else:
            self.cross = None
        self.ln2 = LayerNorm(dim)
        # feed-forward hidden width equals the embedding width
        self.ffn = FeedForward(dim, dim, rng)

    def __call__(self, x, causal_mask, memory=None, memory_mask=None, drop=None):
        h = self.ln1(x)
        x = add(x, drop(self.attn(h, h, causal_mask)))
        if self.cross is not None and memory is not None:
            x = add(x, drop(self.cross(self.ln_x(x), memory, memory_mask)))
        x = add(x, drop(self.ffn(self.ln2(x))))
        return x


class PropertyModel(Module):
    """One decoder predicting a single property sequence (category, orientation,
    or the interleaved location/dimension triples)."""

    def __init__(self, config, rng, memory_dim=None):
        self.config = config
        vocab = config.vocab()
        e = config.embed_dim
        self.value_emb = {"own": Embedding(vocab.vocab_size(config.kind), e, rng)}
        for stream in AUX_STREAMS[config.kind]:
            self.value_emb[stream] = Embedding(vocab.vocab_size(stream), e, rng)
        self.pos_emb = Embedding(config.max_objects + 2, e, rng)
        self.coord_emb = Embedding(3, e, rng) if config.triple else None
        self.blocks = [DecoderBlock(e, config.n_heads, rng, cross=config.cross_attention,
                                    memory_dim=memory_dim)
                       for _ in range(config.n_blocks)]
        self.ln_f = LayerNorm(e)
        self.head = Linear(e, vocab.vocab_size(config.kind), rng)

    def named_parameters(self, prefix=""):
        # value_emb is a dict keyed by stream name; surface it with stable paths
        for stream in sorted(self.value_emb):
            emb = self.value_emb[stream]
            yield from emb.named_parameters(f"{prefix + '.' if prefix else ''}value_emb.{stream}")
        for attr in ("pos_emb", "coord_emb", "blocks", "ln_f", "head"):
            value = getattr(self, attr)
            if value is None:
                continue
            path = f"{prefix}.{attr}" if prefix else attr
            if isinstance(value, list):
                for i, item in enumerate(value):
                    yield from item.named_parameters(f"{path}.{i}")
            else:
                yield from value.named_parameters(path)

    def forward(self, values, positions, coord_types=None, memory=None, memory_mask=None,
                dropout_rng=None):
        """Logits [B, T, V] from [B, T] integer streams.

        values: dict stream -> int array; positions: object-slot ids;
        memory: Tensor [B, M, E] when the config cross-attends. Dropout fires
        only when the config rate is positive AND an rng is supplied."""
        own = values["own"]
        b, t = own.shape
        if t > self.config.max_stream_len:
            raise ValueError(f"stream length {t} exceeds supported {self.config.max_stream_len}")
        if self.config.cross_attention and memory is None:
            raise ValueError(f"{self.config.kind} model configured for {self.config.conditioning} "
                             "conditioning but no memory given")
        rate = self.config.dropout if dropout_rng is not None else 0.0
        drop = (lambda v: dropout(v, rate, dropout_rng)) if rate > 0.0 else (lambda v: v)
        x = self.value_emb["own"](own)
        for stream in AUX_STREAMS[self.config.kind]:
            x = add(x, self.value_emb[stream](values[stream]))
        x = add(x, self.pos_emb(positions))
        if self.coord_emb is not None:
            x = add(x, self.coord_emb(coord_types))
        attn_mask = np.tril(np.ones((t, t), dtype=bool))
        mem_mask = None
        if memory is not None and memory_mask is not None:
            mem_mask = memory_mask[:, None, None, :]  # [B,1,1,M] over heads and queries
        for block in self.blocks:
            x = block(x, attn_mask, memory=memory, memory_mask=mem_mask, drop=drop)
        return self.head(self.ln_f(x))

    def forward_input(self, mi, memory=None, memory_mask=None):
        """Single (unbatched) ModelInput -> logits [T, V]."""
        values = {k: v[None, :] for k, v in mi.values.items()}
        positions = mi.positions[None, :]
        coord = mi.coord_types[None, :] if mi.coord_types is not None else None
        out = self.forward(values, positions, coord_types=coord, memory=memory, memory_mask=memory_mask)
        return reshape(out, (out.shape[1], out.shape[2]))


class ChannelNorm(Module):
    """Layer norm over the channel axis of [B, C, H, W] maps."""

    def __init__(self, channels):
        self.norm = LayerNorm(channels)

    def __call__(self, x):
        moved = transpose(x, (0, 2, 3, 1))
        return transpose(self.norm(moved), (0, 3, 1, 2))


class ResidualLayer(Module):
    def __init__(self, channels, rng):
        self.norm = ChannelNorm(channels)
        self.conv1 = Parameter(rng.normal(0.0, 0.02, size=(channels, channels, 3, 3)))
        self.conv2 = Parameter(rng.normal(0.0, 0.02, size=(channels, channels, 3, 3)))

    def __call__(self, x):
        h = gelu(conv2d(self.norm(x), self.conv1.tensor, stride=1, padding=1))
        return add(x, conv2d(h, self.conv2.tensor, stride=1, padding=1))


class _Downsample(Module):
    def __init__(self, c_in, c_out, rng, stride):
        self.w = Parameter(rng.normal(0.0, 0.02, size=(c_out, c_in, 3, 3)))
        self.stride = stride

    def __call__(self, x):
        return conv2d(x, self.w.tensor, stride=self.stride, padding=1)


class FloorEncoder(Module):
    """Residual conv stack over the binary floor mask; three stages of 3, 3, 4
    residual layers; stem stride 4 plus three stride-2 stages give a /32 grid.
    A learned 2D coordinate embedding is added before flattening row-major."""

    STAGE_LAYERS = (3, 3, 4)

    def __init__(self, embed_dim, resolution, rng):
        if resolution % 32:
            raise ValueError("floor resolution must be divisible by 32")
        self.embed_dim = embed_dim
        self.resolution = resolution
        widths = (max(8, embed_dim // 4), max(8, embed_dim // 2), embed_dim)
        self.stem = Parameter(rng.normal(0.0, 0.02, size=(widths[0], 1, 7, 7)))
        stages = []
        c_prev = widths[0]
        for w_out, n_layers in zip(widths, self.STAGE_LAYERS):
            stage = [_Downsample(c_prev, w_out, rng, stride=2)]
            stage += [ResidualLayer(w_out, rng) for _ in range(n_layers)]
            stages.append(stage)
            c_prev = w_out
        self.stages = stages
        grid = resolution // 32
        self.grid = grid
        self.row_emb = Embedding(grid, embed_dim, rng)
        self.col_emb = Embedding(grid, embed_dim, rng)

    def __call__(self, masks):
        """masks: bool array [B, R, R] -> memory Tensor [B, grid*grid, E]."""
        masks = np.asarray(masks)
        if masks.ndim == 2:
            masks = masks[None]
        b, h, w = masks.shape
        if h != self.resolution or w != self.resolution:
            raise ValueError(f"expected {self.resolution}x{self.resolution} masks, got {h}x{w}")
        x = Tensor(masks.astype(np.float32)[:, None, :, :])
        x = conv2d(x, self.stem.tensor, stride=4, padding=3)
        for stage in self.stages:
            for layer in stage:
                x = layer(x)
        g = self.grid
        rows = np.broadcast_to(np.arange(g)[:, None], (g, g))
        cols = np.broadcast_to(np.arange(g)[None, :], (g, g))
        coord = add(self.row_emb(rows), self.col_emb(cols))  # [g, g, E]
        feat = transpose(x, (0, 2, 3, 1))  # [B, g, g, E]
        feat = add(feat, coord)
        return reshape(feat, (b, g * g, self.embed_dim))


class TextConditioner(Module):
    """Static word vectors -> model-width memory through a 2-layer MLP."""

    def __init__(self, embed_dim, text_dim, rng, max_len=MAX_TEXT_TOKENS):
        self.w1 = Linear(text_dim, embed_dim, rng)
        self.w2 = Linear(embed_dim, embed_dim, rng)
        self.max_len = max_len
        self.text_dim = text_dim

    def __call__(self, vectors, mask):
        """vectors [B, L, d] float, mask [B, L] bool -> (memory [B, L, E], mask)."""
        memory = self.w2(gelu(self.w1(Tensor(vectors))))
        return memory, mask

    def prepare(self, token_vectors):
        """Pad/truncate one [n, d] vector list to max_len; returns (array, mask)."""
        n = len(token_vectors)
        if n == 0:
            raise ValueError("empty text: nothing to condition on")
        arr = np.zeros((self.max_len, self.text_dim), dtype=np.float32)
        take = min(n, self.max_len)
        arr[:take] = np.asarray(token_vectors[:take], dtype=np.float32)
        mask = np.zeros(self.max_len, dtype=bool)
        mask[:take] = True
        return arr, mask


def embed_text(conditioner, tokens, table):
    """Word tokens -> (memory Tensor [<=40, E], memory mask).

    Unknown words map to the zero vector; padding is masked out of
    cross-attention."""
    vectors = [table.vector(tok) for tok in tokens]
    arr, mask = conditioner.prepare(vectors)
    memory, _ = conditioner(arr[None], mask[None])
    return memory, mask[None]


class ModelSet:
    """The four property models plus shared conditioning encoders."""

    def __init__(self, configs, rng=None, table=None, extent=6.0):
        rng = rng or np.random.default_rng(0)
        self.configs = dict(configs)
        self.table = table
        self.extent = extent
        mode = self.mode
        mem_dim = self.memory_dim() if mode != "none" else None
        self.models = {kind: PropertyModel(cfg, rng, memory_dim=mem_dim)
                       for kind, cfg in self.configs.items()}
        any_cfg = next(iter(self.configs.values()))
        self.floor_encoder = None
        self.text_conditioner = None
        self.text_embeddings = None  # static word-vector table, attached at load time
        if mode == "shape":
            self.floor_encoder = FloorEncoder(mem_dim, any_cfg.floor_resolution, rng)
        elif mode == "text":
            self.text_conditioner = TextConditioner(mem_dim, any_cfg.text_embed_dim, rng)

    @property
    def mode(self):
        modes = {cfg.conditioning for cfg in self.configs.values()}
        if len(modes) != 1:
            raise ValueError(f"models disagree on conditioning mode: {modes}")
        return modes.pop()

    def memory_dim(self):
        # the shared encoder emits the narrowest model width; cross-attention
        # projects it up where a model is wider (paper scale: 256 everywhere
        # except the 1024 location model)
        return min(cfg.embed_dim for cfg in self.configs.values())

    def __getitem__(self, kind):
        return self.models[kind]

    def encoder_parameters(self):
        if self.floor_encoder is not None:
            return self.floor_encoder.parameters()
        if self.text_conditioner is not None:
            return self.text_conditioner.parameters()
        return []


def build_model_set(n_categories, mode="none", scale="desk", table=None, extent=6.0,
                    seed=0, **overrides):
    rng = np.random.default_rng(seed)
    make = desk_config if scale == "desk" else paper_config
    if scale == "desk":
        configs = {k: make(k, n_categories, conditioning=mode, **overrides) for k in MODEL_KINDS}
    else:
        configs = {k: make(k, n_categories, conditioning=mode) for k in MODEL_KINDS}
    return ModelSet(configs, rng=rng, table=table, extent=extent)
