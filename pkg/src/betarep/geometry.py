"""Axis-aligned boxes in ``[l, t, r, b]`` pixel coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate or otherwise invalid box geometry."""


@dataclass(frozen=True)
class BBox:
    l: float
    t: float
    r: float
    b: float

    def __post_init__(self):
        vals = (self.l, self.t, self.r, self.b)
        if not all(np.isfinite(v) for v in vals):
            raise GeometryError(f"non-finite box coordinates {vals}")
        if not (self.r > self.l and self.b > self.t):
            raise GeometryError(f"box needs positive width and height, got {vals}")

    @classmethod
    def from_xywh(cls, x, y, w, h) -> "BBox":
        return cls(float(x), float(y), float(x) + float(w), float(y) + float(h))

    @property
    def width(self) -> float:
        return self.r - self.l

    @property
    def height(self) -> float:
        return self.b - self.t

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.l + self.r), 0.5 * (self.t + self.b)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.l, self.t, self.r, self.b)

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.l, self.t, self.width, self.height)

    def clip_to(self, other: "BBox") -> "BBox":
        """Intersection with ``other``; raises if the intersection is empty."""
        return BBox(
            max(self.l, other.l),
            max(self.t, other.t),
            min(self.r, other.r),
            min(self.b, other.b),
        )

    def contains(self, other: "BBox") -> bool:
        return (
            self.l <= other.l
            and self.t <= other.t
            and self.r >= other.r
            and self.b >= other.b
        )

    def union_region(self, other: "BBox") -> "BBox":
        """Smallest box covering both."""
        return BBox(
            min(self.l, other.l),
            min(self.t, other.t),
            max(self.r, other.r),
            max(self.b, other.b),
        )

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.l + dx, self.t + dy, self.r + dx, self.b + dy)

    def scale(self, s: float) -> "BBox":
        return BBox(self.l * s, self.t * s, self.r * s, self.b * s)


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.r, b.r) - max(a.l, b.l)
    h = min(a.b, b.b) - max(a.t, b.t)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(n, 4)`` and ``(m, 4)`` arrays of ``l, t, r, b``."""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=inter > 0)
    return out
