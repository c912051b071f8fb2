"""Greedy non-maximum suppression over Beta Representations.

Strategies:

``fiou``       suppress when full-box IoU > ``iou_threshold``
``viou``       suppress when IoU of the approximate visible boxes > ``viou_threshold``
``fiou_viou``  suppress when both of the above hold
``soft``       Gaussian score decay, ``score * exp(-fiou**2 / soft_sigma)``
``beta``       suppress when symmetrized KL <= ``kl_threshold`` (nats)
"""

from __future__ import annotations

import math
import numbers
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from ._backend import kernels
from .core import BetaPedestrian, WeightConfig, beta_to_visible_box
from .divergence import GridSpec, pack, sym_kl_many
from .geometry import iou_matrix

STRATEGIES = ("fiou", "viou", "fiou_viou", "soft", "beta")


@dataclass(frozen=True)
class Detection:
    pedestrian: BetaPedestrian
    score: float
    id: Any = None

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class NmsConfig:
    strategy: str = "beta"
    iou_threshold: float = 0.5
    viou_threshold: float = 0.35
    kl_threshold: float = 7.0
    soft_sigma: float = 0.5
    soft_score_floor: float = 0.001
    grid: GridSpec = field(default_factory=GridSpec)
    weights: WeightConfig = field(default_factory=WeightConfig)
    prefilter: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        for name in ("iou_threshold", "viou_threshold", "kl_threshold", "soft_sigma", "soft_score_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# named threshold settings for side-by-side comparisons
PRESETS = {
    "fiou-0.5": dict(strategy="fiou", iou_threshold=0.5),
    "viou-0.35": dict(strategy="viou", viou_threshold=0.35),
    "fiou-viou-0.5-0.35": dict(strategy="fiou_viou", iou_threshold=0.5, viou_threshold=0.35),
    "soft": dict(strategy="soft"),
    "beta-6": dict(strategy="beta", kl_threshold=6.0),
    "beta-7": dict(strategy="beta", kl_threshold=7.0),
}


def preset(name: str, **overrides) -> NmsConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return NmsConfig(**{**PRESETS[name], **overrides})


def id_key(value) -> tuple:
    """Total order over heterogeneous ids: numbers, then strings, then tuples of numbers."""
    if isinstance(value, numbers.Real) and not isinstance(value, bool):
        return (0, float(value), "", ())
    if isinstance(value, tuple):
        return (2, 0.0, "", tuple(float(v) for v in value))
    return (1, 0.0, str(value), ())


def ranking_order(dets: Sequence[Detection]) -> list[int]:
    """Indices sorted by score descending, then id ascending."""
    return sorted(range(len(dets)), key=lambda i: (-dets[i].score, id_key(dets[i].id)))


def pairwise_prefilter(dets: Sequence[Detection]) -> list[tuple[int, int]]:
    """Unordered index pairs ``(i, j)``, ``i < j``, whose boundaries overlap with positive area."""
    if len(dets) < 2:
        return []
    boxes = np.array([d.pedestrian.boundary.as_tuple() for d in dets], dtype=np.float64)
    return [tuple(p) for p in kernels.overlap_pairs(boxes).tolist()]


def disjoint_kl_bound(grid: GridSpec) -> float:
    """Lower bound on the symmetrized KL of two pedestrians with disjoint boundaries.

    All of one pedestrian's mass sits on floored cells of the other, so each
    direction is at least ``-log(eps) - log(n_cells)``; one nat of slack
    absorbs the renormalization terms.
    """
    return -math.log(grid.epsilon_floor) - 2.0 * math.log(grid.resolution) - 1.0


def _map_chunks(fn, items: np.ndarray, threads: int, min_chunk: int = 256) -> np.ndarray:
    if threads <= 1 or len(items) < 2 * min_chunk:
        return fn(items)
    n_chunks = min(threads * 4, max(1, len(items) // min_chunk))
    parts = np.array_split(items, n_chunks)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(fn, parts)))


class _Scene:
    """Per-call arrays in ranking order."""

    def __init__(self, dets: Sequence[Detection], cfg: NmsConfig):
        self.order = ranking_order(dets)
        self.dets = [dets[i] for i in self.order]
        self.cfg = cfg
        self.packed = pack([d.pedestrian for d in self.dets])
        self.boxes = self.packed[:, :4]
        self.vis = None
        if cfg.strategy in ("viou", "fiou_viou"):
            self.vis = np.array(
                [beta_to_visible_box(d.pedestrian, cfg.weights).as_tuple() for d in self.dets]
            ).reshape(-1, 4)

    def neighbours(self) -> list[np.ndarray]:
        """For each position, the later positions it may suppress."""
        n = len(self.dets)
        use_prefilter = self.cfg.prefilter and (
            self.cfg.strategy != "beta" or self.cfg.kl_threshold < disjoint_kl_bound(self.cfg.grid)
        )
        if not use_prefilter:
            return [np.arange(i + 1, n) for i in range(n)]
        pairs = kernels.overlap_pairs(self.boxes) if n > 1 else np.empty((0, 2), dtype=np.int64)
        starts = np.searchsorted(pairs[:, 0], np.arange(n + 1))
        return [pairs[starts[i] : starts[i + 1], 1] for i in range(n)]

    def suppress_mask(self, i: int, cand: np.ndarray, threads: int) -> np.ndarray:
        cfg = self.cfg
        if cfg.strategy == "beta":
            kl = _map_chunks(lambda c: sym_kl_many(self.packed[i], self.packed[c], cfg.grid), cand, threads)
            return kl <= cfg.kl_threshold
        hit = np.ones(len(cand), dtype=bool)
        if cfg.strategy in ("fiou", "fiou_viou"):
            hit &= iou_matrix(self.boxes[i], self.boxes[cand])[0] > cfg.iou_threshold
        if cfg.strategy in ("viou", "fiou_viou"):
            hit &= iou_matrix(self.vis[i], self.vis[cand])[0] > cfg.viou_threshold
        return hit


def greedy_nms(dets: Sequence[Detection], cfg: NmsConfig = NmsConfig(), threads: int = 1) -> list[Detection]:
    """Keep the best remaining detection, drop what it suppresses, repeat.

    Returns kept detections in ranking order.  ``strategy='soft'`` is routed to
    :func:`soft_nms`.
    """
    if cfg.strategy == "soft":
        return soft_nms(dets, cfg)
    if not dets:
        return []
    scene = _Scene(dets, cfg)
    n = len(scene.dets)
    suppressed = np.zeros(n, dtype=bool)
    kept = []
    for i, nbrs in enumerate(scene.neighbours()):
        if suppressed[i]:
            continue
        kept.append(scene.dets[i])
        cand = nbrs[~suppressed[nbrs]]
        if cand.size:
            suppressed[cand[scene.suppress_mask(i, cand, threads)]] = True
    return kept


def soft_nms(dets: Sequence[Detection], cfg: NmsConfig = NmsConfig()) -> list[Detection]:
    """Gaussian SoftNMS; returns rescored detections ordered by final score, then id."""
    if not dets:
        return []
    dets = list(dets)
    boxes = np.array([d.pedestrian.boundary.as_tuple() for d in dets], dtype=np.float64)
    scores = np.array([d.score for d in dets], dtype=np.float64)
    id_rank = np.empty(len(dets), dtype=np.int64)
    id_rank[sorted(range(len(dets)), key=lambda i: id_key(dets[i].id))] = np.arange(len(dets))
    alive = scores >= cfg.soft_score_floor
    out = []
    while alive.any():
        live = np.flatnonzero(alive)
        top = live[scores[live] == scores[live].max()]
        i = top[np.argmin(id_rank[top])]
        out.append(replace(dets[i], score=float(scores[i])))
        alive[i] = False
        rest = np.flatnonzero(alive)
        if rest.size == 0:
            break
        ov = iou_matrix(boxes[i], boxes[rest])[0]
        scores[rest] *= np.exp(-(ov * ov) / cfg.soft_sigma)
        alive[rest[scores[rest] < cfg.soft_score_floor]] = False
    out.sort(key=lambda d: (-d.score, id_key(d.id)))
    return out
