"""Beta Representation toolkit for occluded pedestrians."""

from ._backend import kernels
from .core import (
    BetaParams1D,
    BetaPedestrian,
    Moments1D,
    PairedBoxes,
    WeightConfig,
    beta_pdf_1d,
    beta_pdf_2d,
    beta_to_visible_box,
    boxes_to_beta,
    moments_to_beta,
    weighted_moments,
)
from .divergence import GridSpec, PMFGrid, discretize, kl_1d_closed, kl_grid, sym_kl
from .geometry import BBox, iou
from .nms import Detection, NmsConfig, greedy_nms, pairwise_prefilter, soft_nms

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BetaParams1D",
    "BetaPedestrian",
    "Detection",
    "GridSpec",
    "Moments1D",
    "NmsConfig",
    "PMFGrid",
    "PairedBoxes",
    "WeightConfig",
    "beta_pdf_1d",
    "beta_pdf_2d",
    "beta_to_visible_box",
    "boxes_to_beta",
    "discretize",
    "greedy_nms",
    "iou",
    "kernels",
    "kl_1d_closed",
    "kl_grid",
    "moments_to_beta",
    "pairwise_prefilter",
    "soft_nms",
    "sym_kl",
    "weighted_moments",
]
