import math

import numpy as np
import pytest

from scenegen.scene import CategoryTable, FloorPlan, ObjectInstance, Scene, sort_scene
from scenegen.synthetic import GeneratorConfig, make_synthetic_dataset
from scenegen.textgen import (
    RELATION_TEMPLATES,
    RELATION_TYPES,
    EmbeddingTable,
    Relation,
    classify_relation,
    extract_relations,
    generate_description,
    make_embedding_table,
    tokenize,
    vocabulary_words,
)


def table():
    return CategoryTable(
        names=("door", "window", "bed", "table", "lamp", "chair"),
        frequencies=(5, 5, 100, 80, 50, 40),
    )


def obj(cat, x, y, z=0.4, theta=0.0, dims=(0.8, 0.8, 0.8)):
    return ObjectInstance(category=cat, center=(x, y, z), theta=theta, dims=dims)


def scene_of(objects):
    floor = FloorPlan(polygon=((0, 0), (8.0, 0), (8.0, 8.0), (0, 8.0)))
    return sort_scene(Scene(objects=tuple(objects), floor=floor, extent=8.0), table())


# -- relation classification -----------------------------------------------------

def test_lamp_on_table():
    tbl = obj(3, 2.0, 2.0, z=0.375, dims=(1.2, 0.8, 0.75))
    lamp = obj(4, 2.0, 2.0, z=0.75 + 0.2, dims=(0.3, 0.3, 0.4))
    rtype, dist = classify_relation(lamp, tbl)
    assert rtype == "on"
    assert dist == pytest.approx(0.95 - 0.375)  # pure vertical center offset


def test_stacked_with_gap_is_above():
    a = obj(4, 2.0, 2.0, z=2.0, dims=(0.8, 0.8, 0.8))
    b = obj(3, 2.0, 2.0, z=0.4, dims=(0.8, 0.8, 0.8))
    rtype, _ = classify_relation(a, b)
    assert rtype == "above"


def test_directional_quadrants_documented_map():
    b = obj(3, 4.0, 4.0, theta=0.0)
    cases = {
        (5.5, 4.0): "in front of",
        (4.0, 5.5): "left of",
        (2.5, 4.0): "behind",
        (4.0, 2.5): "right of",
    }
    for (x, y), expected in cases.items():
        a = obj(4, x, y)
        rtype, _ = classify_relation(a, b)
        assert rtype == expected, f"a at {(x, y)}: got {rtype}"


def test_directional_uses_reference_frame():
    # b rotated 90 deg: its "front" now points along +y
    b = obj(3, 4.0, 4.0, theta=90.0)
    rtype, _ = classify_relation(obj(4, 4.0, 5.5), b)
    assert rtype == "in front of"


def test_surrounding_and_inside():
    big = obj(3, 3.0, 3.0, dims=(3.0, 3.0, 0.5), z=0.25)
    small = obj(4, 3.0, 3.2, dims=(0.4, 0.4, 1.4), z=0.7)
    assert classify_relation(big, small)[0] == "surrounding"
    assert classify_relation(small, big)[0] == "inside"


def test_cyclic_equivariance_under_position_rotation():
    """Rotating the subject's position -90 deg about the reference cycles
    right of -> behind -> left of -> in front of -> right of."""
    b = obj(3, 4.0, 4.0, theta=30.0)
    a = obj(4, 5.5, 4.0)
    seen = []
    dx, dy = a.center[0] - b.center[0], a.center[1] - b.center[1]
    for _ in range(4):
        moved = obj(4, b.center[0] + dx, b.center[1] + dy)
        seen.append(classify_relation(moved, b)[0])
        dx, dy = dy, -dx  # rotate offset by -90 degrees
    idx = seen.index("right of")
    cycle = [seen[(idx + k) % 4] for k in range(4)]
    assert cycle == ["right of", "behind", "left of", "in front of"]


def test_whole_scene_rotation_leaves_labels_invariant():
    b = obj(3, 4.0, 4.0, theta=70.0)
    a = obj(4, 5.0, 5.2, theta=10.0)
    base = classify_relation(a, b)[0]
    c = 4.0
    for k in (90.0, 180.0, 270.0):
        r = math.radians(k)

        def rot(o):
            dx, dy = o.center[0] - c, o.center[1] - c
            nx = c + dx * math.cos(r) - dy * math.sin(r)
            ny = c + dx * math.sin(r) + dy * math.cos(r)
            return ObjectInstance(category=o.category, center=(nx, ny, o.center[2]),
                                  theta=(o.theta + k) % 360.0, dims=o.dims)

        assert classify_relation(rot(a), rot(b))[0] == base


# -- extraction --------------------------------------------------------------------

def test_far_objects_not_related():
    s = scene_of([obj(2, 1.0, 1.0), obj(3, 4.5, 1.0)])
    assert extract_relations(s) == []


def test_collinear_objects_all_related():
    s = scene_of([obj(2, 1.0, 1.0), obj(3, 2.0, 1.0), obj(4, 3.0, 1.0)])
    rels = extract_relations(s)
    pairs = {(r.subject, r.ref) for r in rels}
    assert pairs == {(1, 0), (2, 1), (2, 0)}


def test_subject_always_later():
    scenes, tbl = make_synthetic_dataset(GeneratorConfig(), 10, seed=2)
    for s in scenes:
        for r in extract_relations(s):
            assert r.subject > r.ref


def test_relation_validates_ordering():
    with pytest.raises(ValueError):
        Relation(subject=1, rtype="on", ref=2, distance=1.0)


def test_relation_types_complete():
    assert set(RELATION_TEMPLATES) == set(RELATION_TYPES)
    assert len(RELATION_TYPES) == 8


# -- description generation -----------------------------------------------------------

def test_single_object_scene_single_sentence():
    s = scene_of([obj(2, 2.0, 2.0)])
    d = generate_description(s, table(), seed=3)
    assert len(d.sentences) == 1
    assert "bed" in d.sentences[0]
    assert d.sentences[0].endswith(".")
    assert d.mentioned == (("bed", 1),)


def test_deterministic_per_seed():
    s = scene_of([obj(2, 2.0, 2.0), obj(3, 2.8, 2.0), obj(4, 2.2, 2.6), obj(5, 3.0, 3.0)])
    a = generate_description(s, table(), seed=11)
    b = generate_description(s, table(), seed=11)
    assert a == b
    outs = {generate_description(s, table(), seed=k).text for k in range(12)}
    assert len(outs) > 1


def test_repeated_category_gets_ordinal():
    s = scene_of([obj(2, 2.0, 2.0), obj(2, 4.0, 2.0), obj(3, 2.6, 2.4)])
    d = generate_description(s, table(), seed=1)
    assert ("bed", 1) in d.mentioned and ("bed", 2) in d.mentioned
    assert "two beds" in d.sentences[0]


def test_first_sentence_mentions_two_or_three():
    scenes, tbl = make_synthetic_dataset(GeneratorConfig(), 20, seed=4)
    for i, s in enumerate(scenes):
        furniture = [o for o in s.objects if not tbl.is_door(o.category) and not tbl.is_window(o.category)]
        if len(furniture) < 3:
            continue
        d = generate_description(s, tbl, seed=i)
        first_count = sum(1 for _ in d.mentioned)  # recompute below
        # count = mentions attributable to the first sentence: mentioned order
        # starts with the first-sentence objects
        n_rel_sentences = len(d.sentences) - 1
        first_count = len(d.mentioned) - n_rel_sentences
        assert first_count in (2, 3)


def test_relational_sentences_use_valid_relations():
    scenes, tbl = make_synthetic_dataset(GeneratorConfig(), 30, seed=8)
    for i, s in enumerate(scenes):
        rels = extract_relations(s)
        d = generate_description(s, tbl, seed=100 + i, relations=rels)
        n_rel_sentences = len(d.sentences) - 1
        # every relational sentence mentioned exactly one new object
        assert len(d.mentioned) - n_rel_sentences >= 1
        for name, ordinal in d.mentioned:
            assert name in tbl.names
            assert not tbl.is_door(tbl.index(name)) and not tbl.is_window(tbl.index(name))


def test_mentions_subset_of_scene_categories():
    scenes, tbl = make_synthetic_dataset(GeneratorConfig(), 15, seed=10)
    for i, s in enumerate(scenes):
        d = generate_description(s, tbl, seed=i)
        scene_counts = {}
        for o in s.objects:
            scene_counts[tbl.name(o.category)] = scene_counts.get(tbl.name(o.category), 0) + 1
        mention_counts = {}
        for name, _ in d.mentioned:
            mention_counts[name] = mention_counts.get(name, 0) + 1
        for name, count in mention_counts.items():
            assert count <= scene_counts.get(name, 0)


def test_same_category_relations_rejected():
    # two beds 1 m apart plus a lamp: the second bed may only relate to the lamp
    s = scene_of([obj(2, 2.0, 2.0), obj(2, 3.0, 2.0), obj(4, 2.5, 2.8), obj(5, 2.2, 3.2)])
    for seed in range(40):
        d = generate_description(s, table(), seed=seed)
        for sent in d.sentences[1:]:
            words = sent.split()
            assert not ("bed" in words and words.count("bed") == 2 and "beds" not in words) or True
            # direct check: no sentence relates a bed to a bed
            assert "bed" not in sent or sent.count("bed") <= 1 or "beds" in sent


# -- tokenization -----------------------------------------------------------------------

def test_tokenize_drops_punctuation():
    assert tokenize("There is a table .") == ["there", "is", "a", "table"]


def test_tokenize_sentence_cut():
    text = "One here . Two here . Three here . Four here ."
    assert tokenize(text, max_sentences=3) == ["one", "here", "two", "here", "three", "here"]


# -- embedding tables ---------------------------------------------------------------------

def test_embedding_table_roundtrip(tmp_path):
    t = make_embedding_table(["bed", "lamp", "room"], dim=100, seed=0)
    assert t.dim == 100
    p = tmp_path / "emb.txt"
    t.save(p)
    back = EmbeddingTable.load(p)
    assert back.dim == 100
    np.testing.assert_allclose(back.vector("bed"), t.vector("bed"), atol=1e-5)


def test_embedding_unknown_word():
    t = make_embedding_table(["bed"], dim=8, seed=0)
    assert t.lookup("sofa") is None
    assert np.all(t.vector("sofa") == 0.0)


def test_embedding_inconsistent_width_rejected(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("bed 1.0 2.0\nlamp 1.0 2.0 3.0\n")
    with pytest.raises(ValueError):
        EmbeddingTable.load(p)


def test_vocabulary_covers_descriptions():
    scenes, tbl = make_synthetic_dataset(GeneratorConfig(), 10, seed=6)
    words = set(vocabulary_words(tbl))
    for i, s in enumerate(scenes):
        d = generate_description(s, tbl, seed=i)
        for w in tokenize(d.text):
            assert w in words, f"describer emitted {w!r} missing from vocabulary"
