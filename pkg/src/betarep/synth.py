"""Seeded synthetic crowds.

Persons stand in a row on a common baseline.  ``overlap`` controls how far
each one is shifted from its left neighbour: 0 leaves a gap, values near 1
stack them almost on top of each other.  Depth increases monotonically along
the row, so a person is hidden only by neighbours standing in front; the
hidden part is cut out as a full-height strip and the largest remaining strip
becomes the visible box.  Persons involved in no overlap draw a visibility
pattern from ``patterns`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PairedBoxes, WeightConfig, boxes_to_beta
from .dataio import Person, SceneAnnotation
from .geometry import BBox
from .nms import Detection

PATTERNS = ("full", "left", "right", "top", "bottom", "center")
_GAP = 0.15


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_scenes: int = 10
    persons: tuple[int, int] = (2, 6)
    overlap: float = 0.5
    patterns: dict = field(
        default_factory=lambda: {"full": 0.5, "left": 0.1, "right": 0.1, "top": 0.1, "bottom": 0.1, "center": 0.1}
    )
    height_range: tuple[float, float] = (80.0, 300.0)
    aspect: float = 0.41
    min_visible_frac: float = 0.05

    def __post_init__(self):
        lo, hi = self.persons
        if not 1 <= lo <= hi:
            raise ValueError("persons range must satisfy 1 <= min <= max")
        if self.n_scenes < 0:
            raise ValueError("n_scenes must be >= 0")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must lie in [0, 1]")
        if not self.patterns or any(k not in PATTERNS for k in self.patterns):
            raise ValueError(f"patterns must be a non-empty mapping over {PATTERNS}")
        if any(v < 0 for v in self.patterns.values()) or sum(self.patterns.values()) <= 0:
            raise ValueError("pattern weights must be non-negative with a positive sum")
        if not 0 < self.height_range[0] <= self.height_range[1]:
            raise ValueError("height_range must be positive and ordered")


def _pattern_box(full: BBox, pattern: str, rng: np.random.Generator) -> BBox:
    f = rng.uniform(0.4, 0.8)
    l, t, r, b = full.as_tuple()
    w, h = full.width, full.height
    if pattern == "left":
        return BBox(l, t, l + f * w, b)
    if pattern == "right":
        return BBox(r - f * w, t, r, b)
    if pattern == "top":
        return BBox(l, t, r, t + f * h)
    if pattern == "bottom":
        return BBox(l, b - f * h, r, b)
    if pattern == "center":
        mx, my = 0.5 * (1 - f) * w, 0.5 * (1 - f) * h
        return BBox(l + mx, t + my, r - mx, b - my)
    return full


def _visible_strip(lo: float, hi: float, covers: list[tuple[float, float]]) -> tuple[float, float]:
    """Largest sub-interval of ``[lo, hi]`` not covered by any interval in ``covers``."""
    pieces = [(lo, hi)]
    for cl, cr in covers:
        nxt = []
        for pl, pr in pieces:
            if cr <= pl or cl >= pr:
                nxt.append((pl, pr))
                continue
            if cl > pl:
                nxt.append((pl, cl))
            if cr < pr:
                nxt.append((cr, pr))
        pieces = nxt
    if not pieces:
        return lo, lo
    return max(pieces, key=lambda p: p[1] - p[0])


def _scene(rng: np.random.Generator, cfg: SynthConfig, image_id: str) -> SceneAnnotation:
    k = int(rng.integers(cfg.persons[0], cfg.persons[1] + 1))
    h0 = rng.uniform(*cfg.height_range)
    heights = h0 * rng.uniform(0.9, 1.1, k)
    widths = cfg.aspect * heights * rng.uniform(0.95, 1.05, k)
    base = 1.2 * cfg.height_range[1] + rng.normal(0.0, 0.02 * h0, k)
    front_right = rng.random() < 0.5
    # step the edge on the side each occludee stays visible, so its strip is
    # a fixed fraction of its own width whatever the neighbour's size
    edges = np.empty(k)
    edges[0] = rng.uniform(0.0, 50.0)
    for i in range(1, k):
        step = (1.0 - cfg.overlap) * (1.0 + _GAP) * rng.uniform(0.95, 1.05)
        edges[i] = edges[i - 1] + widths[i - 1 if front_right else i] * step
    lefts = edges if front_right else edges - widths
    fulls = [BBox(lefts[i], base[i] - heights[i], lefts[i] + widths[i], base[i]) for i in range(k)]

    depth = np.arange(k) if front_right else np.arange(k)[::-1]
    pnames = list(cfg.patterns)
    pw = np.array([cfg.patterns[p] for p in pnames], dtype=np.float64)
    pw /= pw.sum()

    persons = []
    for i, full in enumerate(fulls):
        others = [j for j in range(k) if j != i and min(full.r, fulls[j].r) > max(full.l, fulls[j].l)]
        front = [j for j in others if depth[j] > depth[i]]
        if front:
            vl, vr = _visible_strip(full.l, full.r, [(fulls[j].l, fulls[j].r) for j in front])
            if vr - vl < cfg.min_visible_frac * full.width:
                raise SynthError(
                    f"overlap {cfg.overlap} leaves person {i} of {image_id} without a visible part"
                )
            vis = BBox(vl, full.t, vr, full.b)
        elif others:
            vis = full
        else:
            vis = _pattern_box(full, pnames[rng.choice(len(pnames), p=pw)], rng)
        persons.append(Person(PairedBoxes(full, vis)))
    return SceneAnnotation(image_id, tuple(persons))


def synth_scenes(cfg: SynthConfig) -> list[SceneAnnotation]:
    """Deterministic crowd scenes for ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    return [_scene(rng, cfg, f"synth_{cfg.seed}_{s:06d}") for s in range(cfg.n_scenes)]


def synth_detections(
    scene: SceneAnnotation,
    per_person: int,
    seed: int = 0,
    jitter: float = 0.05,
    weights: WeightConfig = WeightConfig(),
) -> list[Detection]:
    """Noisy detector output: ``per_person`` jittered copies of every annotated person."""
    rng = np.random.default_rng(seed)
    dets = []
    for k, person in enumerate(scene.persons):
        full, vis = person.paired.full, person.paired.visible
        for c in range(per_person):
            sx, sy = jitter * full.width, jitter * full.height
            fl, fr = full.l + rng.normal(0, sx), full.r + rng.normal(0, sx)
            ft, fb = full.t + rng.normal(0, sy), full.b + rng.normal(0, sy)
            if fr - fl < 0.5 * full.width or fb - ft < 0.5 * full.height:
                fl, ft, fr, fb = full.as_tuple()
            jf = BBox(fl, ft, fr, fb)
            jv = BBox(vis.l + (fl - full.l), vis.t + (ft - full.t), vis.r + (fl - full.l), vis.b + (ft - full.t))
            try:
                paired = PairedBoxes(jf, jv)
            except ValueError:
                paired = PairedBoxes(jf, jf)
            score = rng.uniform(0.7, 1.0) if c == 0 else rng.uniform(0.05, 0.9)
            dets.append(Detection(boxes_to_beta(paired, weights, counter=None), float(score), k * per_person + c))
    return dets
