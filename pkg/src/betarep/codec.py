"""Regression targets and beta masks for a detection head.

Targets are ``[l, t, r, b, mu_x, mu_y, sigma_x, sigma_y]``: the boundary is
encoded with the usual anchor centre/size deltas, the shape as an anchor
relative mean offset and log deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BetaPedestrian,
    Moments1D,
    WeightConfig,
    beta_moments,
    moments_to_beta,
)
from .geometry import BBox, GeometryError


class InvalidTargetError(ValueError):
    pass


@dataclass(frozen=True)
class Anchor:
    x_a: float
    y_a: float
    w_a: float
    h_a: float

    def __post_init__(self):
        if not (self.w_a > 0 and self.h_a > 0):
            raise ValueError("anchor size must be positive")

    @classmethod
    def from_box(cls, box: BBox) -> "Anchor":
        cx, cy = box.center
        return cls(cx, cy, box.width, box.height)


@dataclass(frozen=True)
class BetaTargets:
    boundary: BBox
    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise InvalidTargetError("sigma_x and sigma_y must be positive")


@dataclass(frozen=True)
class DeltaVec:
    d_cx: float
    d_cy: float
    d_logw: float
    d_logh: float
    t_mux: float
    t_muy: float
    t_logsx: float
    t_logsy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise InvalidTargetError("deltas must be finite")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.d_cx, self.d_cy, self.d_logw, self.d_logh,
             self.t_mux, self.t_muy, self.t_logsx, self.t_logsy],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, v) -> "DeltaVec":
        return cls(*(float(e) for e in v))


def encode_targets(gt: BetaTargets, a: Anchor) -> DeltaVec:
    bd = gt.boundary
    cx, cy = bd.center
    return DeltaVec(
        d_cx=(cx - a.x_a) / a.w_a,
        d_cy=(cy - a.y_a) / a.h_a,
        d_logw=math.log(bd.width / a.w_a),
        d_logh=math.log(bd.height / a.h_a),
        t_mux=(gt.mu_x - a.x_a) / a.w_a,
        t_muy=(gt.mu_y - a.y_a) / a.h_a,
        t_logsx=math.log(gt.sigma_x / a.w_a),
        t_logsy=math.log(gt.sigma_y / a.h_a),
    )


def decode_targets(d: DeltaVec, a: Anchor) -> BetaTargets:
    cx = a.x_a + d.d_cx * a.w_a
    cy = a.y_a + d.d_cy * a.h_a
    w = a.w_a * math.exp(d.d_logw)
    h = a.h_a * math.exp(d.d_logh)
    try:
        boundary = BBox(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    except GeometryError as exc:
        raise GeometryError(f"decoded boundary is degenerate: {exc}") from exc
    return BetaTargets(
        boundary=boundary,
        mu_x=a.x_a + d.t_mux * a.w_a,
        mu_y=a.y_a + d.t_muy * a.h_a,
        sigma_x=a.w_a * math.exp(d.t_logsx),
        sigma_y=a.h_a * math.exp(d.t_logsy),
    )


def targets_from_beta(bp: BetaPedestrian, cfg: WeightConfig = WeightConfig()) -> BetaTargets:
    bd = bp.boundary
    mx = beta_moments(bp.x, bd.l, bd.r, cfg)
    my = beta_moments(bp.y, bd.t, bd.b, cfg)
    return BetaTargets(bd, mx.mu, my.mu, mx.sigma, my.sigma)


def beta_from_targets(t: BetaTargets, cfg: WeightConfig = WeightConfig()) -> BetaPedestrian:
    """Shape parameters for predicted moments, as fed to the mask branch."""
    bd = t.boundary
    px = moments_to_beta(Moments1D(t.mu_x, t.sigma_x), bd.l, bd.r, cfg, counter=None)
    py = moments_to_beta(Moments1D(t.mu_y, t.sigma_y), bd.t, bd.b, cfg, counter=None)
    return BetaPedestrian(bd, px, py)


def smooth_l1(pred, target, transition: float = 1.0) -> float:
    """Summed SmoothL1 over delta vectors."""
    p = pred.as_array() if isinstance(pred, DeltaVec) else np.asarray(pred, dtype=np.float64)
    t = target.as_array() if isinstance(target, DeltaVec) else np.asarray(target, dtype=np.float64)
    diff = np.abs(p - t)
    loss = np.where(diff < transition, 0.5 * diff * diff / transition, diff - 0.5 * transition)
    return float(loss.sum())


def render_mask(bp: BetaPedestrian, h: int, w: int) -> np.ndarray:
    """``h x w`` mask of the 2D beta density at cell centres of the boundary, summing to one."""
    if h < 1 or w < 1:
        raise ValueError("mask size must be at least 1x1")
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    lx = (bp.x.alpha - 1.0) * np.log(xs) + (bp.x.beta - 1.0) * np.log1p(-xs)
    ly = (bp.y.alpha - 1.0) * np.log(ys) + (bp.y.beta - 1.0) * np.log1p(-ys)
    lx -= lx.max()
    ly -= ly.max()
    m = np.exp(ly)[:, None] * np.exp(lx)[None, :]
    return m / m.sum()


def mask_kl_loss(predicted: np.ndarray, truth: np.ndarray, eps: float = 1e-12) -> float:
    """KL from ``truth`` to ``predicted`` after flooring both at ``eps`` and renormalizing."""
    p = np.asarray(predicted, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"mask shapes differ: {p.shape} vs {t.shape}")
    p = np.maximum(p, eps)
    t = np.maximum(t, eps)
    p = p / p.sum()
    t = t / t.sum()
    return max(float(np.sum(t * (np.log(t) - np.log(p)))), 0.0)
