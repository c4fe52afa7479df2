"""Generation glued to assembly: each generated object is placed immediately;
when no catalog entry fits (20 ranks exhausted), the object's tokens are
rolled back and it is resampled, at most 3 times, before being dropped with a
warning."""

from __future__ import annotations

from dataclasses import dataclass, field

from .assembly import insert_objects
from .codec import SEQ_NAMES, decode_scene
from .sampler import _make_state, generate_next_object

MAX_SLOT_RESAMPLES = 3


@dataclass
class AssemblyResult:
    scene: object
    placed: list
    warnings: list = field(default_factory=list)
    resampled_slots: int = 0
    dropped_slots: int = 0
    state: object = None


def _pop_last_object(bundle):
    for name in SEQ_NAMES:
        bundle.tokens[name].pop()


def generate_and_assemble(model_set, catalog, floor=None, text=None, seed=0,
                          greedy=False, nucleus_p=0.9, max_objects=None):
    """Full conditioned generation with collision-aware placement."""
    table = model_set.table
    state = _make_state(model_set, floor=floor, text=text, seed=seed, greedy=greedy,
                        nucleus_p=nucleus_p, max_objects=max_objects)
    placed = []
    warnings = []
    result = AssemblyResult(scene=None, placed=placed, warnings=warnings)

    # door/window prefix objects are placed first, collision-exempt
    prefix_scene = decode_scene(_closed_copy(state.bundle), table, model_set.extent, floor=floor)
    for obj in prefix_scene.objects:
        new, _ = insert_objects([obj], catalog, table, existing=placed)
        placed.extend(new)

    retries = 0
    # resamples regenerate from an unchanged prefix, so cap total attempts as
    # a termination backstop
    attempts_left = 4 * state.max_objects + 10
    while not state.stopped and attempts_left > 0:
        attempts_left -= 1
        before = state.bundle.n_objects
        if not generate_next_object(state, model_set):
            break
        obj = _last_object(state.bundle, table, model_set.extent)
        new, requests = insert_objects([obj], catalog, table, existing=placed)
        if not requests:
            placed.extend(new)
            retries = 0
            continue
        if retries < MAX_SLOT_RESAMPLES:
            # roll the tokens back and let the sampler try this slot again
            _pop_last_object(state.bundle)
            assert state.bundle.n_objects == before
            retries += 1
            result.resampled_slots += 1
            continue
        # drop from placement only: the tokens stay, so generation moves on
        result.dropped_slots += 1
        warnings.append(f"left {table.name(obj.category)} unplaced after "
                        f"{MAX_SLOT_RESAMPLES} resamples (slot {before})")
        retries = 0
    if attempts_left <= 0:
        warnings.append("generation attempt budget exhausted; scene closed early")
        state.bundle.closed = True

    result.scene = decode_scene(_closed_copy(state.bundle), table, model_set.extent, floor=floor)
    result.state = state
    return result


def _closed_copy(bundle):
    b = bundle.copy()
    b.closed = True
    return b


def _last_object(bundle, table, extent):
    b = _closed_copy(bundle)
    scene = decode_scene(b, table, extent)
    return scene.objects[-1]


def assemble_existing(scene, catalog, table):
    """Placement pass for an already-complete scene (service /complete path)."""
    placed, requests = insert_objects(list(scene.objects), catalog, table)
    warnings = [f"could not place {r.category} (object {r.index})" for r in requests]
    return placed, warnings
