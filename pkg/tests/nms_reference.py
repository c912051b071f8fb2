"""Brute-force NMS used as an oracle: full O(n^2) similarity, no prefilter."""

import math

import numpy as np

from betarep import _backend
from betarep.core import BetaParams1D, BetaPedestrian, PairedBoxes, beta_to_visible_box, boxes_to_beta
from betarep.geometry import BBox, iou
from betarep.nms import Detection, id_key


def _key(d):
    return (-d.score, id_key(d.id))


def brute_greedy(dets, cfg):
    order = sorted(dets, key=_key)
    n = len(order)
    if n == 0:
        return []
    packed = np.array([d.pedestrian.as_array() for d in order])
    if cfg.strategy == "beta":
        k = _backend.python_kernels
        pairs = np.array([(i, j) for i in range(n) for j in range(n)], dtype=np.int64)
        kl = k.sym_kl_pairs(packed, pairs, cfg.grid.resolution, cfg.grid.epsilon_floor).reshape(n, n)
    vis = [beta_to_visible_box(d.pedestrian, cfg.weights) for d in order]

    def similar(i, j):
        fi = iou(order[i].pedestrian.boundary, order[j].pedestrian.boundary)
        vi = iou(vis[i], vis[j])
        if cfg.strategy == "fiou":
            return fi > cfg.iou_threshold
        if cfg.strategy == "viou":
            return vi > cfg.viou_threshold
        if cfg.strategy == "fiou_viou":
            return fi > cfg.iou_threshold and vi > cfg.viou_threshold
        return kl[i, j] <= cfg.kl_threshold

    alive = [True] * n
    kept = []
    for i in range(n):
        if not alive[i]:
            continue
        kept.append(order[i])
        for j in range(i + 1, n):
            if alive[j] and similar(i, j):
                alive[j] = False
    return kept


def brute_soft(dets, cfg):
    pool = [(d, d.score) for d in dets if d.score >= cfg.soft_score_floor]
    out = []
    while pool:
        best = min(range(len(pool)), key=lambda k: (-pool[k][1], id_key(pool[k][0].id)))
        d, s = pool.pop(best)
        out.append((d, s))
        nxt = []
        for e, t in pool:
            f = iou(d.pedestrian.boundary, e.pedestrian.boundary)
            t = t * math.exp(-f * f / cfg.soft_sigma)
            if t >= cfg.soft_score_floor:
                nxt.append((e, t))
        pool = nxt
    out.sort(key=lambda p: (-p[1], id_key(p[0].id)))
    return [(d.id, s) for d, s in out]


def random_scene(rng, max_dets=20):
    """Clustered detections around a few people, with score ties."""
    n_people = int(rng.integers(1, 5))
    n = int(rng.integers(0, max_dets + 1))
    people = []
    for _ in range(n_people):
        h = rng.uniform(60, 200)
        w = 0.41 * h
        l, t = rng.uniform(0, 150), rng.uniform(0, 50)
        people.append((l, t, w, h))
    dets = []
    ids = rng.permutation(n)
    for k in range(n):
        l, t, w, h = people[int(rng.integers(n_people))]
        jl, jt = rng.normal(0, 0.1 * w), rng.normal(0, 0.1 * h)
        jw, jh = w * rng.uniform(0.85, 1.15), h * rng.uniform(0.85, 1.15)
        full = BBox(l + jl, t + jt, l + jl + jw, t + jt + jh)
        fx = np.sort(rng.uniform(0, 1, 2))
        fy = np.sort(rng.uniform(0, 1, 2))
        fx[1] = max(fx[1], fx[0] + 0.2)
        fy[1] = max(fy[1], fy[0] + 0.2)
        vis = BBox(full.l + fx[0] * jw, full.t + fy[0] * jh, full.l + min(fx[1], 1) * jw, full.t + min(fy[1], 1) * jh)
        bp = boxes_to_beta(PairedBoxes(full, vis), counter=None)
        score = round(float(rng.uniform(0, 1)), 1)
        dets.append(Detection(bp, score, int(ids[k])))
    return dets
