"""Spatial relation extraction and the rule-based room describer, plus text
tokenization and static word-embedding tables.

Relations relate a later object in the canonical sequence (the subject) to an
earlier one. Directional labels use the reference object's canonical frame:
rotate the center offset by -theta_ref, take the angle, and map quadrants
[-45,45) -> "in front of", [45,135) -> "left of", [135,225) -> "behind",
[225,315) -> "right of". Doors and windows are never described.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .kernels import convex_clip_area

RELATION_TYPES = ("on", "above", "surrounding", "inside", "right of", "left of", "behind", "in front of")
RELATION_THRESHOLD_M = 2.5
VERTICAL_CONTACT_M = 0.05
# appendix value; the main text's 0.3 is kept available via the argument
DESCRIBE_PROB = 0.7

_ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth", "seventh",
             "eighth", "ninth", "tenth", "eleventh", "twelfth")
_COUNTS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine")
_PLURAL_IRREGULAR = {"bookshelf": "bookshelves"}


def _templates():
    with resources.files("scenegen.data").joinpath("templates.json").open() as f:
        return json.load(f)


_T = _templates()
OPENERS = tuple(_T["openers"])
RELATION_TEMPLATES = dict(_T["relations"])


@dataclass(frozen=True)
class Relation:
    subject: int  # later object in the sequence
    rtype: str
    ref: int  # earlier object
    distance: float

    def __post_init__(self):
        if self.subject <= self.ref:
            raise ValueError("relation subject must come later in the sequence than its reference")
        if self.distance < 0:
            raise ValueError("distance must be non-negative")


@dataclass(frozen=True)
class Description:
    sentences: tuple
    mentioned: tuple  # ((category_name, ordinal), ...)
    seed: int
    relations_used: tuple = ()  # one Relation per sentence after the first

    @property
    def text(self):
        return " ".join(self.sentences)


def _footprint(o):
    r = math.radians(o.theta)
    c, s = math.cos(r), math.sin(r)
    hx, hy = o.dims[0] / 2.0, o.dims[1] / 2.0
    cx, cy = o.center[0], o.center[1]
    return np.array([
        (cx + c * dx - s * dy, cy + s * dx + c * dy)
        for dx, dy in ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy))
    ])


def _in_local_frame(point, o):
    r = math.radians(o.theta)
    c, s = math.cos(r), math.sin(r)
    dx, dy = point[0] - o.center[0], point[1] - o.center[1]
    return (c * dx + s * dy, -s * dx + c * dy)


def _center_in_footprint(a, b):
    lx, ly = _in_local_frame((a.center[0], a.center[1]), b)
    return abs(lx) <= b.dims[0] / 2.0 and abs(ly) <= b.dims[1] / 2.0


def _footprint_contains(outer, inner):
    for corner in _footprint(inner):
        lx, ly = _in_local_frame(corner, outer)
        if abs(lx) > outer.dims[0] / 2.0 + 1e-9 or abs(ly) > outer.dims[1] / 2.0 + 1e-9:
            return False
    return True


def classify_relation(a, b):
    """Relation of a (subject) to b (reference): (type, center distance)."""
    dist = math.dist(a.center, b.center)
    a_bottom = a.center[2] - a.dims[2] / 2.0
    b_top = b.center[2] + b.dims[2] / 2.0
    gap = a_bottom - b_top
    if -1e-9 <= gap <= VERTICAL_CONTACT_M and _center_in_footprint(a, b):
        return "on", dist
    if gap > VERTICAL_CONTACT_M and convex_clip_area(_footprint(a), _footprint(b)) > 1e-9:
        return "above", dist
    if _footprint_contains(a, b):
        return "surrounding", dist
    if _footprint_contains(b, a):
        return "inside", dist
    lx, ly = _in_local_frame((a.center[0], a.center[1]), b)
    ang = math.degrees(math.atan2(ly, lx)) % 360.0
    quadrant = int(((ang + 45.0) % 360.0) // 90.0)
    return ("in front of", "left of", "behind", "right of")[quadrant], dist


def extract_relations(scene, threshold=RELATION_THRESHOLD_M):
    """All (later -> earlier) pairs closer than the threshold, classified."""
    out = []
    objs = scene.objects
    for i in range(len(objs)):
        for j in range(i):
            rtype, dist = classify_relation(objs[i], objs[j])
            if dist < threshold:
                out.append(Relation(subject=i, rtype=rtype, ref=j, distance=dist))
    return out


# -- description generation --------------------------------------------------------


def _display(name):
    return name.replace("_", " ")


def _plural(name):
    disp = _display(name)
    if name in _PLURAL_IRREGULAR:
        return _display(_PLURAL_IRREGULAR[name])
    return disp + "s"


def _article(phrase):
    return "an" if phrase[0] in "aeiou" else "a"


def _with_ordinal(name, ordinal):
    disp = _display(name)
    return disp if ordinal == 1 else f"{_ORDINALS[ordinal - 1]} {disp}"


def generate_description(scene, table, seed, relations=None, p_desc=DESCRIBE_PROB,
                         threshold=RELATION_THRESHOLD_M):
    """Seed-deterministic sentence list for a sorted scene.

    First sentence lists the first 2 or 3 furniture objects; each later
    sentence relates one new object to an already-described one through a
    uniformly chosen relation (same-category pairs rejected). Doors and
    windows are skipped entirely."""
    rng = np.random.default_rng(seed)
    if relations is None:
        relations = extract_relations(scene, threshold)
    rel_by_subject = {}
    for r in relations:
        rel_by_subject.setdefault(r.subject, []).append(r)

    furniture = [(i, o) for i, o in enumerate(scene.objects)
                 if not table.is_door(o.category) and not table.is_window(o.category)]
    if not furniture:
        raise ValueError("scene has no describable objects")

    take = int(rng.integers(2, 4))
    head = furniture[:min(take, len(furniture))]

    mentioned = []  # (category_name, ordinal) in mention order
    ordinal_of = {}  # object index -> (name, ordinal)
    counts = {}

    def mention(idx, cat_idx):
        name = table.name(cat_idx)
        counts[name] = counts.get(name, 0) + 1
        ordinal_of[idx] = (name, counts[name])
        mentioned.append((name, counts[name]))

    # first sentence groups repeated categories ("two stands")
    groups = []
    for idx, o in head:
        name = table.name(o.category)
        if groups and groups[-1][0] == name:
            groups[-1][1].append(idx)
        else:
            groups.append([name, [idx]])
    parts = []
    for name, idxs in groups:
        if len(idxs) == 1:
            disp = _display(name)
            parts.append(f"{_article(disp)} {disp}")
        else:
            parts.append(f"{_COUNTS[len(idxs)]} {_plural(name)}")
        for idx in idxs:
            mention(idx, scene.objects[idx].category)
    opener = OPENERS[int(rng.integers(0, len(OPENERS)))]
    if len(parts) == 1:
        listing = parts[0]
    else:
        listing = ", ".join(parts[:-1]) + " and " + parts[-1]
    sentences = [f"{opener} {listing} ."]

    used = []
    for idx, o in furniture[len(head):]:
        if rng.random() >= p_desc:
            continue
        cands = [
            r for r in rel_by_subject.get(idx, [])
            if r.ref in ordinal_of
            and scene.objects[r.ref].category != o.category
            and r.distance < threshold
        ]
        if not cands:
            continue
        rel = cands[int(rng.integers(0, len(cands)))]
        mention(idx, o.category)
        used.append(rel)
        subj_name, subj_ord = ordinal_of[idx]
        ref_name, ref_ord = ordinal_of[rel.ref]
        subj_phrase = _with_ordinal(subj_name, subj_ord)
        obj_phrase = _with_ordinal(ref_name, ref_ord)
        template = RELATION_TEMPLATES[rel.rtype]
        sentences.append(template.format(
            subj=subj_phrase,
            subj_a=f"{_article(subj_phrase)} {subj_phrase}",
            obj=obj_phrase,
        ))

    return Description(sentences=tuple(sentences), mentioned=tuple(mentioned),
                       seed=seed, relations_used=tuple(used))


# -- tokenization -------------------------------------------------------------------

_WORD_RE = re.compile(r"[a-z0-9']+")
_SENT_SPLIT = re.compile(r"[.!?]")


def tokenize(text, max_sentences=None):
    """Lowercase words, punctuation dropped; sentence boundaries honored for
    the first-N cut."""
    pieces = [p for p in _SENT_SPLIT.split(text.lower()) if p.strip()]
    if max_sentences is not None:
        pieces = pieces[:max_sentences]
    words = []
    for p in pieces:
        words.extend(_WORD_RE.findall(p))
    return words


# -- embedding tables ------------------------------------------------------------------


class EmbeddingTable:
    """word -> fixed-dimension vector map (GloVe-style text format)."""

    def __init__(self, dim, vectors):
        self.dim = dim
        self._vectors = vectors

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, word):
        return word in self._vectors

    def lookup(self, word):
        """Vector or None for unknown words."""
        return self._vectors.get(word)

    def vector(self, word):
        """Vector, or the zero vector for unknown words."""
        v = self._vectors.get(word)
        return v if v is not None else np.zeros(self.dim, dtype=np.float32)

    @classmethod
    def load(cls, path):
        vectors = {}
        dim = None
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                word, vals = parts[0], parts[1:]
                if dim is None:
                    dim = len(vals)
                elif len(vals) != dim:
                    raise ValueError(f"{path}:{line_no}: expected {dim} values, got {len(vals)}")
                vectors[word] = np.asarray([float(v) for v in vals], dtype=np.float32)
        if dim is None:
            raise ValueError(f"empty embedding table: {path}")
        return cls(dim, vectors)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for word, vec in self._vectors.items():
                f.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


def vocabulary_words(table):
    """Every word the describer can emit for a category table."""
    words = set()
    for opener in OPENERS:
        words.update(tokenize(opener))
    for tpl in RELATION_TEMPLATES.values():
        words.update(tokenize(tpl.replace("{subj_a}", "").replace("{subj}", "").replace("{obj}", "")))
    words.update(_ORDINALS)
    words.update(_COUNTS)
    words.update(("a", "an", "the", "and"))
    for name in table.names:
        words.update(tokenize(_display(name)))
        words.update(tokenize(_plural(name)))
    return sorted(words)


def make_embedding_table(words, dim=100, seed=0):
    """Deterministic random unit-ish vectors per word (desk-scale stand-in for
    a pretrained table)."""
    rng = np.random.default_rng(seed)
    vectors = {w: rng.normal(0.0, 1.0, size=dim).astype(np.float32) / math.sqrt(dim) for w in sorted(words)}
    return EmbeddingTable(dim, vectors)
