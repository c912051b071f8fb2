"""Distances between Beta Representations.

Production pairwise distances go through the separable kernels in
``_backend``; :func:`discretize` and :func:`kl_grid` build and compare the
dense 2D mass grids explicitly and serve as the slow reference path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, logsumexp

from ._backend import kernels
from .core import BetaParams1D, BetaPedestrian, log_beta_fn
from .geometry import BBox, GeometryError, iou


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 128
    epsilon_floor: float = 1e-12

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 8:
            raise ValueError("resolution must be an integer >= 8")
        if not 0.0 < self.epsilon_floor < 1e-6:
            raise ValueError("epsilon_floor must lie in (0, 1e-6)")


@dataclass(frozen=True, eq=False)
class PMFGrid:
    """Normalized mass per cell; ``values[j, i]`` is row ``j`` (y) and column ``i`` (x)."""

    origin: tuple[float, float]
    cell_size: tuple[float, float]
    values: np.ndarray
    log_values: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def same_layout(self, other: "PMFGrid") -> bool:
        return (
            self.shape == other.shape
            and self.origin == other.origin
            and self.cell_size == other.cell_size
        )


def _axis_logdensity(
    centers: np.ndarray, start: float, h: float, lo: float, hi: float, p: BetaParams1D
) -> np.ndarray:
    """Unnormalized log beta density at ``centers``; -inf outside the open support."""
    xn = (centers - lo) / (hi - lo)
    inside = (xn > 0.0) & (xn < 1.0)
    xs = np.where(inside, xn, 0.5)
    lp = (p.alpha - 1.0) * np.log(xs) + (p.beta - 1.0) * np.log1p(-xs) - log_beta_fn(p.alpha, p.beta)
    lp = np.where(inside, lp, -np.inf)
    if not inside.any():
        # boundary narrower than a cell: all mass in the cell holding its centre
        k = int(np.clip(math.floor((0.5 * (lo + hi) - start) / h), 0, len(centers) - 1))
        lp[k] = 0.0
    return lp


def discretize(bp: BetaPedestrian, region: BBox, spec: GridSpec = GridSpec()) -> PMFGrid:
    """Sample the 2D density at cell centres of ``region`` and normalize.

    Cells where the density is zero (off the boundary) get ``spec.epsilon_floor``
    before renormalizing, so every log-mass is finite.
    """
    if not region.contains(bp.boundary):
        raise GridError("region must cover the pedestrian boundary")
    n = spec.resolution
    hx = region.width / n
    hy = region.height / n
    cx = region.l + (np.arange(n) + 0.5) * hx
    cy = region.t + (np.arange(n) + 0.5) * hy
    bd = bp.boundary
    lx = _axis_logdensity(cx, region.l, hx, bd.l, bd.r, bp.x)
    ly = _axis_logdensity(cy, region.t, hy, bd.t, bd.b, bp.y)
    logdens = ly[:, None] + lx[None, :] - math.log(bd.area)

    support = np.isfinite(logdens)
    logmass = logdens - logsumexp(logdens[support])
    n_floor = int((~support).sum())
    eps = spec.epsilon_floor
    z = math.log1p(n_floor * eps)
    log_values = np.where(support, logmass, math.log(eps)) - z
    return PMFGrid((region.l, region.t), (hx, hy), np.exp(log_values), log_values)


def kl_grid(p: PMFGrid, q: PMFGrid) -> float:
    """Discrete KL divergence ``sum p (log p - log q)`` in nats."""
    if not p.same_layout(q):
        raise GridError("grids differ in origin, cell size or shape")
    return float(np.sum(p.values * (p.log_values - q.log_values)))


def kl_1d_closed(p: BetaParams1D, q: BetaParams1D) -> float:
    """Closed-form KL(Be(p) || Be(q)) via log-beta and digamma."""
    ap, bp_, aq, bq = p.alpha, p.beta, q.alpha, q.beta
    return float(
        log_beta_fn(aq, bq)
        - log_beta_fn(ap, bp_)
        + (ap - aq) * digamma(ap)
        + (bp_ - bq) * digamma(bp_)
        + (aq - ap + bq - bp_) * digamma(ap + bp_)
    )


def sym_kl(a: BetaPedestrian, b: BetaPedestrian, spec: GridSpec = GridSpec()) -> float:
    """Symmetrized KL on a shared grid over the union of both boundaries."""
    out = kernels.sym_kl_one_to_many(a.as_array(), b.as_array()[None, :], spec.resolution, spec.epsilon_floor)
    return float(out[0])


def sym_kl_dense(a: BetaPedestrian, b: BetaPedestrian, spec: GridSpec = GridSpec()) -> float:
    """Same quantity as :func:`sym_kl`, built from explicit dense grids."""
    region = a.boundary.union_region(b.boundary)
    p = discretize(a, region, spec)
    q = discretize(b, region, spec)
    return 0.5 * (kl_grid(p, q) + kl_grid(q, p))


def sym_kl_many(ref: BetaPedestrian | np.ndarray, others: np.ndarray, spec: GridSpec = GridSpec()) -> np.ndarray:
    """:func:`sym_kl` from one pedestrian to each packed row of ``others``."""
    r = ref.as_array() if isinstance(ref, BetaPedestrian) else np.asarray(ref, dtype=np.float64)
    return kernels.sym_kl_one_to_many(r, others, spec.resolution, spec.epsilon_floor)


def sym_kl_pairs(peds: np.ndarray, pairs: np.ndarray, spec: GridSpec = GridSpec()) -> np.ndarray:
    return kernels.sym_kl_pairs(peds, pairs, spec.resolution, spec.epsilon_floor)


def pack(peds) -> np.ndarray:
    """Stack pedestrians into an ``(n, 8)`` array."""
    if len(peds) == 0:
        return np.empty((0, 8))
    return np.stack([p.as_array() for p in peds])


__all__ = [
    "GridError",
    "GridSpec",
    "GeometryError",
    "PMFGrid",
    "discretize",
    "iou",
    "kl_1d_closed",
    "kl_grid",
    "pack",
    "sym_kl",
    "sym_kl_dense",
    "sym_kl_many",
    "sym_kl_pairs",
]
