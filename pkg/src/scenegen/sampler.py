"""Autoregressive inference: token-by-token generation across the four chained
models, nucleus sampling for the category head and argmax everywhere else.

Per object the order is category, orientation, location (x, y, z), dimension
(l, w, h); each new token is appended to its sequence before the next model
runs. A STOP from any model closes the scene.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import SequenceBundle, TokenVocab, build_model_input, decode_scene
from .model import embed_text
from .nn import no_grad
from .scene import MAX_OBJECTS, SceneError, quantize_value, sort_scene
from .textgen import tokenize

NUCLEUS_P = 0.9


def nucleus_sample(logits, p, rng, exclude=()):
    """Top-p sampling: draw from the smallest descending-probability prefix
    whose cumulative mass reaches p, renormalized. `exclude` token ids (PAD)
    never come out."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    logits = np.asarray(logits, dtype=np.float64).copy()
    for tok in exclude:
        logits[tok] = -np.inf
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    order = np.argsort(-probs, kind="stable")
    csum = np.cumsum(probs[order])
    cut = int(np.searchsorted(csum, p)) + 1
    keep = order[:cut]
    kept = probs[keep] / probs[keep].sum()
    return int(rng.choice(keep, p=kept))


def argmax_token(logits, exclude=()):
    """Greedy pick; ties resolve to the lowest token id."""
    logits = np.asarray(logits, dtype=np.float64).copy()
    for tok in exclude:
        logits[tok] = -np.inf
    return int(logits.argmax())


@dataclass
class GenerationState:
    bundle: SequenceBundle
    rng: np.random.Generator
    floor_memory: object = None
    text_memory: object = None
    text_mask: np.ndarray | None = None
    max_objects: int = MAX_OBJECTS
    stopped: bool = False
    budget_exhausted: bool = False
    greedy_category: bool = False
    nucleus_p: float = NUCLEUS_P

    @property
    def n_objects(self):
        return self.bundle.n_objects


def _query(model, state, kind):
    mi = build_model_input(state.bundle, kind)
    memory, memory_mask = None, None
    if model.config.cross_attention:
        if model.config.conditioning == "shape":
            memory = state.floor_memory
        else:
            memory, memory_mask = state.text_memory, state.text_mask
        if memory is None:
            raise SceneError(f"{kind} model needs {model.config.conditioning} conditioning memory")
    with no_grad():
        logits = model.forward_input(mi, memory=memory, memory_mask=memory_mask)
    return logits.data[mi.valid_len - 1]


def generate_next_object(state, models):
    """One full object: category (nucleus), orientation (argmax), location x3,
    dimension x3. Returns False when STOP ends the scene."""
    if state.stopped:
        raise SceneError("generation already stopped")
    if state.n_objects >= state.max_objects:
        state.stopped = True
        state.budget_exhausted = True
        state.bundle.closed = True
        return False
    vocab = state.bundle.vocab

    def finished(token, layout):
        return token >= layout.value_range  # START/STOP/PAD all close the scene

    lay_c = vocab.layout("category")
    logits = _query(models["category"], state, "category")
    if state.greedy_category:
        tok = argmax_token(logits, exclude=(lay_c.pad, lay_c.start))
    else:
        tok = nucleus_sample(logits, state.nucleus_p, state.rng, exclude=(lay_c.pad, lay_c.start))
    if finished(tok, lay_c):
        state.stopped = True
        state.bundle.closed = True
        return False
    state.bundle.append("c", tok)

    steps = [("orientation", ("theta",)), ("location", ("x", "y", "z")), ("dimension", ("l", "w", "h"))]
    for kind, seqs in steps:
        lay = vocab.layout(kind)
        for name in seqs:
            logits = _query(models[kind], state, kind)
            tok = argmax_token(logits, exclude=(lay.pad, lay.start))
            if finished(tok, lay):
                # a non-category STOP terminates mid-object; drop the partial object
                _rollback_partial(state.bundle)
                state.stopped = True
                state.bundle.closed = True
                return False
            state.bundle.append(name, tok)
    return True


def _rollback_partial(bundle):
    n = min(len(v) for v in bundle.tokens.values())
    for name in bundle.tokens:
        del bundle.tokens[name][n:]


def prefix_from_floor(floor, table, extent, vocab=None):
    """Door/window tokens that prime every sequence in shape mode."""
    vocab = vocab or TokenVocab(len(table))
    bundle = SequenceBundle(vocab=vocab)
    fixtures = sorted(floor.doors, key=lambda o: o.center) + sorted(floor.windows, key=lambda o: o.center)
    for o in fixtures:
        bundle.append("c", o.category)
        bundle.append("x", quantize_value(o.center[0], "location", extent))
        bundle.append("y", quantize_value(o.center[1], "location", extent))
        bundle.append("z", quantize_value(o.center[2], "location", extent))
        bundle.append("theta", quantize_value(o.theta, "orientation"))
        bundle.append("l", quantize_value(o.dims[0], "dimension", extent))
        bundle.append("w", quantize_value(o.dims[1], "dimension", extent))
        bundle.append("h", quantize_value(o.dims[2], "dimension", extent))
    bundle.prefix = len(fixtures)
    return bundle


def _make_state(model_set, floor=None, text=None, seed=0, greedy=False, bundle=None,
                nucleus_p=NUCLEUS_P, max_objects=None):
    mode = model_set.mode
    if mode == "shape" and floor is None:
        raise SceneError("shape-conditioned models need a floor plan")
    if mode == "text" and text is None:
        raise SceneError("text-conditioned models need a description")
    if mode != "text" and text is not None:
        raise SceneError(f"{mode}-mode models cannot take a text condition")
    vocab = TokenVocab(len(model_set.table))
    if bundle is None:
        if mode == "shape":
            bundle = prefix_from_floor(floor, model_set.table, model_set.extent, vocab)
        else:
            bundle = SequenceBundle(vocab=vocab)
    state = GenerationState(
        bundle=bundle,
        rng=np.random.default_rng(seed),
        greedy_category=greedy,
        nucleus_p=nucleus_p,
        max_objects=max_objects or next(iter(model_set.configs.values())).max_objects,
    )
    if mode == "shape":
        res = next(iter(model_set.configs.values())).floor_resolution
        mask = floor.mask(res, model_set.extent)
        with no_grad():
            state.floor_memory = model_set.floor_encoder(mask[None])
    elif mode == "text":
        tokens = tokenize(text, max_sentences=3) if isinstance(text, str) else list(text)
        state.text_memory, state.text_mask = embed_text(
            model_set.text_conditioner, tokens, model_set.text_embeddings)
    return state


def generate_scene(model_set, floor=None, text=None, seed=0, greedy=False,
                   nucleus_p=NUCLEUS_P, max_objects=None):
    """Full scene from conditioning: loops generate_next_object until STOP,
    then decodes the bundle."""
    state = _make_state(model_set, floor=floor, text=text, seed=seed, greedy=greedy,
                        nucleus_p=nucleus_p, max_objects=max_objects)
    while not state.stopped:
        generate_next_object(state, model_set)
    scene = decode_scene(state.bundle, model_set.table, model_set.extent, floor=floor)
    return scene, state


def complete_scene(model_set, partial, floor=None, text=None, max_new=None, seed=0,
                   greedy=False, nucleus_p=NUCLEUS_P):
    """Extend a partial scene; the input objects are preserved verbatim and new
    ones are appended until STOP or max_new."""
    table = model_set.table
    if not sort_scene(partial, table).objects == partial.objects:
        raise SceneError("partial scene must be sorted before completion")
    from .codec import encode_scene

    bundle = encode_scene(partial, table)
    bundle.closed = False  # reopen for appending
    if model_set.mode == "shape":
        # door/window conditioning tokens may already sit in the partial scene
        bundle.prefix = sum(1 for o in partial.objects
                            if table.is_door(o.category) or table.is_window(o.category))
    state = _make_state(model_set, floor=floor if floor is not None else partial.floor,
                        text=text, seed=seed, greedy=greedy, bundle=bundle, nucleus_p=nucleus_p)
    added = 0
    limit = max_new if max_new is not None else MAX_OBJECTS
    while not state.stopped and added < limit:
        if generate_next_object(state, model_set):
            added += 1
    state.bundle.closed = True
    scene = decode_scene(state.bundle, table, model_set.extent,
                         floor=floor if floor is not None else partial.floor)
    return scene, added, state
