import numpy as np
import pytest

from scenegen import codec
from scenegen.codec import (
    CodecError,
    SequenceBundle,
    TokenVocab,
    build_model_input,
    decode_bundle,
    decode_scene,
    encode_scene,
)
from scenegen.scene import (
    CategoryTable,
    FloorPlan,
    ObjectInstance,
    Scene,
    dequantize_value,
    quantize_value,
    sort_scene,
)
from scenegen.synthetic import GeneratorConfig, make_synthetic_dataset

EXTENT = 6.0


def table():
    return CategoryTable(
        names=("door", "window", "bed", "chair", "lamp"),
        frequencies=(5, 5, 100, 80, 50),
    )


def floor():
    return FloorPlan(polygon=((0.0, 0.0), (EXTENT, 0.0), (EXTENT, EXTENT), (0.0, EXTENT)))


def scene_of(objects):
    return sort_scene(Scene(objects=tuple(objects), floor=floor(), extent=EXTENT), table())


def obj(cat, x=1.0, y=2.0, z=0.25, theta=0.0, dims=(0.5, 0.6, 0.7)):
    return ObjectInstance(category=cat, center=(x, y, z), theta=theta, dims=dims)


def test_vocab_layout():
    v = TokenVocab(n_categories=5)
    lay = v.layout("category")
    assert (lay.start, lay.stop, lay.pad, lay.vocab_size) == (5, 6, 7, 8)
    assert v.layout("orientation").vocab_size == 363
    assert v.layout("location").vocab_size == 259
    assert v.layout("dimension").vocab_size == 259


def test_empty_scene_sequences():
    b = encode_scene(scene_of([]), table())
    seqs = b.padded_sequences(pad_to=5)
    for name in codec.SEQ_NAMES:
        lay = b.vocab.layout(codec.KIND_OF_SEQ[name])
        assert seqs[name] == [lay.start, lay.stop, lay.pad, lay.pad, lay.pad]


def test_single_object_encoding():
    s = scene_of([obj(2, x=2.57, y=2.57, z=2.57, theta=45.0)])
    b = encode_scene(s, table())
    assert b.n_objects == 1
    seqs = b.padded_sequences()
    assert all(len(seqs[n]) == 3 for n in codec.SEQ_NAMES)
    assert seqs["c"][1] == 2
    assert seqs["x"][1] == quantize_value(2.57, "location", EXTENT)
    assert seqs["theta"][1] == 45


def test_unsorted_scene_rejected():
    s = Scene(objects=(obj(4), obj(2, x=3.0)), floor=floor(), extent=EXTENT)
    with pytest.raises(CodecError):
        encode_scene(s, table())


def test_roundtrip_matches_quantized_scene():
    rng = np.random.default_rng(0)
    objs = [
        obj(int(rng.integers(2, 5)), *rng.uniform(0.5, 5.5, size=3), theta=float(rng.integers(0, 360)))
        for _ in range(10)
    ]
    s = scene_of(objs)
    b = encode_scene(s, table())
    back = decode_scene(b, table(), EXTENT)
    assert len(back.objects) == 10
    for orig, dec in zip(s.objects, back.objects):
        assert dec.category == orig.category
        for axis in range(3):
            q = quantize_value(orig.center[axis], "location", EXTENT)
            assert dec.center[axis] == pytest.approx(dequantize_value(q, "location", EXTENT))
        assert dec.theta == quantize_value(orig.theta, "orientation")
    # re-encoding the decoded scene gives identical tokens
    b2 = encode_scene(sort_scene(back, table()), table())
    assert b2.tokens == b.tokens


def test_prefix_counts_doors_windows():
    s = scene_of([obj(2), obj(0, x=0.1), obj(1, x=0.2)])
    b = encode_scene(s, table())
    assert b.prefix == 2


def test_decode_restores_flags():
    s = scene_of([obj(0, x=0.1), obj(2, x=2.0)])
    back = decode_scene(encode_scene(s, table()), table(), EXTENT)
    assert back.floor.doors and back.floor.doors[0].category == 0


def test_decode_immediate_stop_is_empty():
    b = encode_scene(scene_of([]), table())
    back = decode_scene(b, table(), EXTENT)
    assert back.objects == ()


def test_decode_inconsistent_stop_errors():
    b = encode_scene(scene_of([obj(2), obj(3, x=3.0), obj(4, x=4.0)]), table())
    seqs = b.padded_sequences(pad_to=8)
    lay = b.vocab.layout("location")
    # x now claims 4 objects while every other sequence claims 3
    seqs["x"][4] = 10
    seqs["x"][5] = lay.stop
    with pytest.raises(CodecError):
        decode_bundle(seqs, table(), EXTENT)


def test_dump_format():
    b = encode_scene(scene_of([obj(2)]), table())
    lines = b.dump().splitlines()
    assert len(lines) == 8
    assert lines[0].startswith("c ")
    assert all(tok.isdigit() for tok in lines[0].split()[1:])


def test_dump_golden():
    # pinned token ids: category 2, center (1, 2, 0.25), theta 0, dims (.5, .6, .7), extent 6
    b = encode_scene(scene_of([obj(2)]), table())
    assert b.dump() == "\n".join([
        "c 5 2 6",
        "x 256 42 257",
        "y 256 85 257",
        "z 256 10 257",
        "theta 360 0 361",
        "l 256 21 257",
        "w 256 25 257",
        "h 256 29 257",
    ])


# -- model input construction --------------------------------------------------


def two_object_bundle():
    return encode_scene(scene_of([obj(2, x=1.0), obj(3, x=2.0, theta=90.0)]), table())


def test_category_input_is_shifted_bundle():
    b = two_object_bundle()
    mi = build_model_input(b, "category")
    lay = b.vocab.layout("category")
    assert mi.values["own"].tolist() == [lay.start, 2, 3]
    assert mi.targets.tolist() == [2, 3, lay.stop]
    assert mi.loss_mask.all()
    assert mi.positions.tolist() == [0, 1, 2]
    assert mi.coord_types is None


def test_orientation_sees_current_category():
    b = two_object_bundle()
    mi = build_model_input(b, "orientation")
    lay_t = b.vocab.layout("orientation")
    lay_c = b.vocab.layout("category")
    assert mi.values["own"].tolist() == [lay_t.start, 0, 90]
    # category stream shifted left: position predicting theta_1 sees c_1
    assert mi.values["category"].tolist() == [2, 3, lay_c.stop]
    assert mi.targets.tolist() == [0, 90, lay_t.stop]


def test_location_stream_interleaving_and_lengths():
    b = two_object_bundle()
    mi = build_model_input(b, "location")
    n = b.n_objects
    assert mi.valid_len == 3 * (n + 2) - 1
    lay = b.vocab.layout("location")
    own = mi.values["own"].tolist()
    assert own[:3] == [lay.start] * 3
    xs, ys, zs = b.tokens["x"], b.tokens["y"], b.tokens["z"]
    assert own[3:9] == [xs[0], ys[0], zs[0], xs[1], ys[1], zs[1]]
    assert own[-2:] == [lay.stop, lay.stop]
    # targets begin with two masked START fillers then x_1
    assert mi.targets.tolist()[:3] == [lay.start, lay.start, xs[0]]
    assert not mi.loss_mask[0] and not mi.loss_mask[1] and mi.loss_mask[2]
    assert mi.coord_types.tolist() == [i % 3 for i in range(mi.valid_len)]
    assert mi.positions.tolist() == [i // 3 for i in range(mi.valid_len)]


def test_location_aux_alignment():
    b = two_object_bundle()
    mi = build_model_input(b, "location")
    # slot predicting x_1 (index 2) must carry c_1 and theta_1
    assert mi.values["category"][2] == 2
    assert mi.values["orientation"][2] == 0
    # slot predicting x_2 (index 5) carries c_2, theta_2
    assert mi.values["category"][5] == 3
    assert mi.values["orientation"][5] == 90


def test_dimension_consumes_location_stream():
    b = two_object_bundle()
    mi = build_model_input(b, "dimension")
    assert set(mi.values) == {"own", "category", "orientation", "location"}
    xs = b.tokens["x"]
    # slot predicting l_1 (index 2) sees x_1 on the shifted location stream
    assert mi.values["location"][2] == xs[0]


def test_prefix_positions_excluded_from_loss():
    b = encode_scene(scene_of([obj(0, x=0.2), obj(1, x=0.4), obj(2, x=2.0)]), table())
    assert b.prefix == 2
    mi = build_model_input(b, "category")
    # targets: [door, window, bed, STOP]; first two masked
    assert mi.loss_mask.tolist() == [False, False, True, True]
    mi3 = build_model_input(b, "location")
    target_obj = [(i + 1) // 3 for i in range(mi3.valid_len)]
    for slot, tobj in enumerate(target_obj):
        if 1 <= tobj <= 2:
            assert not mi3.loss_mask[slot]


def test_stop_targets_never_masked():
    b = two_object_bundle()
    for kind in codec.MODEL_KINDS:
        mi = build_model_input(b, kind)
        lay = b.vocab.layout(kind)
        stop_slots = mi.targets == lay.stop
        assert stop_slots.any()
        assert mi.loss_mask[stop_slots].all()


def test_padding_masks_and_pad_tokens():
    b = two_object_bundle()
    mi = build_model_input(b, "category", pad_to=8)
    lay = b.vocab.layout("category")
    assert len(mi.values["own"]) == 8
    assert mi.values["own"][-1] == lay.pad
    assert not mi.loss_mask[-5:].any()
    assert mi.targets[-1] == lay.pad


def test_generation_mode_streams():
    b = two_object_bundle()
    g = SequenceBundle(vocab=b.vocab)
    g.append("c", 2)
    # querying theta_1: own stream [START], category stream supplies c_1
    mi = build_model_input(g, "orientation")
    lay_t = g.vocab.layout("orientation")
    assert mi.values["own"].tolist() == [lay_t.start]
    assert mi.values["category"].tolist() == [2]
    assert mi.targets is None

    g.append("theta", 90)
    g.append("x", 100)
    # querying y_1: own [S,S,S,x1]; aux category c1 at the query slot
    mi = build_model_input(g, "location")
    assert mi.values["own"].tolist()[-1] == 100
    assert mi.values["category"].tolist()[-1] == 2
    assert mi.valid_len == 4


def test_triple_stream_length_relation():
    for n in (0, 1, 4):
        objs = [obj(2, x=0.5 + 0.5 * i) for i in range(n)]
        b = encode_scene(scene_of(objs), table())
        scalar = build_model_input(b, "category").valid_len
        triple = build_model_input(b, "location").valid_len
        assert scalar == n + 1
        assert triple == 3 * (n + 2) - 1


def test_synthetic_scene_roundtrips():
    scenes, tbl = make_synthetic_dataset(GeneratorConfig(), 20, seed=31)
    for s in scenes:
        b = encode_scene(s, tbl)
        back = decode_scene(b, tbl, s.extent, floor=s.floor)
        b2 = encode_scene(sort_scene(back, tbl), tbl)
        assert b2.tokens == b.tokens
