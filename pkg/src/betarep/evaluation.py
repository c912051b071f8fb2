"""Detection metrics and the KL-versus-IoU pair study.

AP is the all-points interpolated area under the precision/recall curve.
MR^-2 is the geometric mean of the miss rate sampled at nine FPPI values
spaced evenly in log space over ``[1e-2, 1]``; zero miss rates are clamped to
``1e-10`` before the log and a result at the clamp is reported as 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import WeightConfig, boxes_to_beta
from .dataio import SceneAnnotation
from .divergence import GridSpec, pack, sym_kl_pairs
from .geometry import BBox, iou, iou_matrix
from .nms import id_key

TP, FP, IGNORED = "TP", "FP", "ignored"
MATCHED, MISSED = "matched", "missed"
MR_FLOOR = 1e-10
FPPI_POINTS = np.logspace(-2.0, 0.0, 9)


class UndefinedMetricError(ValueError):
    pass


@dataclass
class MatchResult:
    """Per-image matching outcome.

    ``det_labels`` follows the order of the input detections; ignored ground
    truth gets the label ``"ignored"`` and never counts as missed.
    """

    det_scores: list[float]
    det_labels: list[str]
    gt_labels: list[str]
    det_match: list[int | None] = field(default_factory=list)

    @property
    def n_tp(self) -> int:
        return self.det_labels.count(TP)

    @property
    def n_fp(self) -> int:
        return self.det_labels.count(FP)

    @property
    def n_gt(self) -> int:
        return sum(1 for g in self.gt_labels if g != IGNORED)

    @property
    def n_missed(self) -> int:
        return self.gt_labels.count(MISSED)


def match_detections(
    dets: Sequence[tuple[BBox, float]],
    gts: Sequence[tuple[BBox, bool]],
    iou_thresh: float = 0.5,
) -> MatchResult:
    """Greedy matching of ``(box, score)`` detections to ``(box, ignore)`` ground truth.

    Detections are visited by descending score (stable for ties).  Each takes
    the unmatched, non-ignored ground truth with the highest IoU at or above
    ``iou_thresh``; failing that, a detection overlapping an ignored region at
    the threshold is left out of scoring, otherwise it is a false positive.
    """
    n_det = len(dets)
    det_labels = [FP] * n_det
    det_match: list[int | None] = [None] * n_det
    gt_labels = [IGNORED if ign else MISSED for _, ign in gts]
    if n_det == 0:
        return MatchResult([], [], gt_labels, [])
    det_boxes = np.array([b.as_tuple() for b, _ in dets]).reshape(-1, 4)
    gt_boxes = np.array([b.as_tuple() for b, _ in gts]).reshape(-1, 4)
    ignore = np.array([bool(ign) for _, ign in gts], dtype=bool)
    ious = iou_matrix(det_boxes, gt_boxes) if len(gts) else np.zeros((n_det, 0))
    taken = np.zeros(len(gts), dtype=bool)
    order = sorted(range(n_det), key=lambda i: -dets[i][1])
    for i in order:
        row = ious[i]
        free = (~ignore) & (~taken) & (row >= iou_thresh)
        if free.any():
            j = int(np.flatnonzero(free)[np.argmax(row[free])])
            taken[j] = True
            det_labels[i] = TP
            det_match[i] = j
            gt_labels[j] = MATCHED
        elif (ignore & (row >= iou_thresh)).any():
            det_labels[i] = IGNORED
    return MatchResult([float(s) for _, s in dets], det_labels, gt_labels, det_match)


def _sweep(results: Sequence[MatchResult]):
    """Cumulative TP/FP over all scored detections, highest score first."""
    n_gt = sum(r.n_gt for r in results)
    if n_gt == 0:
        raise UndefinedMetricError("no non-ignored ground truth")
    rows = []
    for img, r in enumerate(results):
        for k, (s, lab) in enumerate(zip(r.det_scores, r.det_labels)):
            if lab != IGNORED:
                rows.append((-s, img, k, lab == TP))
    rows.sort()
    is_tp = np.array([row[3] for row in rows], dtype=bool)
    return np.cumsum(is_tp), np.cumsum(~is_tp), n_gt


def average_precision(results: Sequence[MatchResult]) -> float:
    tp, fp, n_gt = _sweep(results)
    if tp.size == 0:
        return 0.0
    recall = tp / n_gt
    precision = tp / (tp + fp)
    # precision envelope, then sum over recall steps
    env = np.maximum.accumulate(precision[::-1])[::-1]
    r_prev = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - r_prev) * env))


def miss_rate_curve(results: Sequence[MatchResult]) -> tuple[np.ndarray, np.ndarray]:
    """``(fppi, miss_rate)`` staircase, starting from the empty detection set."""
    tp, fp, n_gt = _sweep(results)
    n_img = len(results)
    fppi = np.concatenate([[0.0], fp / n_img])
    mr = np.concatenate([[1.0], 1.0 - tp / n_gt])
    return fppi, mr


def log_avg_miss_rate(results: Sequence[MatchResult]) -> float:
    fppi, mr = miss_rate_curve(results)
    samples = np.empty(len(FPPI_POINTS))
    for k, ref in enumerate(FPPI_POINTS):
        # lowest miss rate reachable without exceeding the reference FPPI
        samples[k] = mr[np.flatnonzero(fppi <= ref)[-1]]
    value = float(np.exp(np.mean(np.log(np.maximum(samples, MR_FLOOR)))))
    return 0.0 if value <= MR_FLOOR * (1 + 1e-9) else value


# --- pair statistics -------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    image: str
    idx_a: int
    idx_b: int
    fiou: float
    viou: float
    sym_kl: float


@dataclass
class PairSummary:
    n_pairs: int
    fiou_failed: int
    viou_failed: int
    kl_failed: dict[float, int]
    iou_threshold: float
    viou_threshold: float

    def as_dict(self) -> dict:
        return {
            "pairs": self.n_pairs,
            "fiou_failed": self.fiou_failed,
            "viou_failed": self.viou_failed,
            "kl_failed": {str(k): v for k, v in sorted(self.kl_failed.items())},
            "iou_threshold": self.iou_threshold,
            "viou_threshold": self.viou_threshold,
        }


def _scene_pairs(scene: SceneAnnotation, weights: WeightConfig, grid: GridSpec) -> list[PairRecord]:
    people = scene.scored_persons()
    if len(people) < 2:
        return []
    full = np.array([p.paired.full.as_tuple() for _, p in people])
    f = iou_matrix(full, full)
    ia, ib = np.nonzero(np.triu(f > 0.0, k=1))
    if ia.size == 0:
        return []
    peds = pack([boxes_to_beta(p.paired, weights, counter=None) for _, p in people])
    kl = sym_kl_pairs(peds, np.stack([ia, ib], axis=1), grid)
    out = []
    for a, b, d in zip(ia.tolist(), ib.tolist(), kl.tolist()):
        pa, pb = people[a][1], people[b][1]
        out.append(
            PairRecord(
                scene.image_id,
                people[a][0],
                people[b][0],
                float(f[a, b]),
                iou(pa.paired.visible, pb.paired.visible),
                d,
            )
        )
    return out


def pair_statistics(
    scenes: Sequence[SceneAnnotation],
    weights: WeightConfig = WeightConfig(),
    grid: GridSpec = GridSpec(),
    kl_thresholds: Sequence[float] = (6.0, 7.0),
    iou_threshold: float = 0.5,
    viou_threshold: float = 0.35,
    threads: int = 1,
) -> tuple[list[PairRecord], PairSummary]:
    """Records for every overlapping (fIoU > 0) pair of non-ignored persons in a scene.

    A pair counts as failed for a criterion when that criterion would merge the
    two people: fIoU > ``iou_threshold``, vIoU > ``viou_threshold``, or
    symmetrized KL <= a KL threshold.
    """
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_scene = list(pool.map(lambda s: _scene_pairs(s, weights, grid), scenes))
    else:
        per_scene = [_scene_pairs(s, weights, grid) for s in scenes]
    records = [r for rs in per_scene for r in rs]
    fi = np.array([r.fiou for r in records])
    vi = np.array([r.viou for r in records])
    kl = np.array([r.sym_kl for r in records])
    summary = PairSummary(
        n_pairs=len(records),
        fiou_failed=int((fi > iou_threshold).sum()),
        viou_failed=int((vi > viou_threshold).sum()),
        kl_failed={float(t): int((kl <= t).sum()) for t in kl_thresholds},
        iou_threshold=iou_threshold,
        viou_threshold=viou_threshold,
    )
    return records, summary


def evaluate(
    detections: dict[str, Sequence],
    scenes: Sequence[SceneAnnotation],
    iou_thresh: float = 0.5,
) -> dict:
    """AP and MR^-2 for detections keyed by image id (``Detection`` objects)."""
    results = []
    for scene in scenes:
        dets = sorted(detections.get(scene.image_id, []), key=lambda d: (-d.score, id_key(d.id)))
        gts = [(p.paired.full, p.ignore) for p in scene.persons]
        results.append(match_detections([(d.pedestrian.boundary, d.score) for d in dets], gts, iou_thresh))
    return {
        "AP": average_precision(results),
        "MR-2": log_avg_miss_rate(results),
        "images": len(results),
        "gt": sum(r.n_gt for r in results),
        "detections": sum(len(r.det_labels) for r in results),
    }
