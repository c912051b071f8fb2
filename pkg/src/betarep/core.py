"""Beta Representation of a pedestrian.

A pedestrian annotated with a full-body box and a visible box is turned into
a 2D beta distribution: the full-body box is the support, and one beta
distribution per axis concentrates mass on the visible part.  The per-axis
shape comes from the weighted mean and deviation of a piecewise-constant
pixel weight (``w_visible`` inside the visible box, ``w_full`` elsewhere).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import BBox, GeometryError

CLAMP_FLOOR = 1.0 + 1e-6


class InfeasibleMomentsError(ValueError):
    """The requested mean/deviation cannot be matched by any beta distribution."""


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class WeightConfig:
    w_visible: float = 1.0
    w_full: float = 0.04
    rho: float = math.sqrt(12.0)
    lam: float | None = None

    def __post_init__(self):
        if self.lam is None:
            object.__setattr__(self, "lam", self.rho / 4.0)
        if not (self.w_visible > self.w_full > 0.0):
            raise ValueError("need w_visible > w_full > 0")
        if not (self.rho > 0.0 and self.lam > 0.0):
            raise ValueError("rho and lam must be positive")


@dataclass(frozen=True)
class PairedBoxes:
    """Full-body box plus visible box; the visible box is clipped into the full one."""

    full: BBox
    visible: BBox

    def __post_init__(self):
        if not self.full.contains(self.visible):
            # clip_to raises GeometryError on an empty intersection
            object.__setattr__(self, "visible", self.visible.clip_to(self.full))


@dataclass(frozen=True)
class Moments1D:
    mu: float
    sigma: float


@dataclass(frozen=True)
class BetaParams1D:
    alpha: float
    beta: float
    clamped: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise ValueError(f"beta shape parameters must be positive, got {self.alpha}, {self.beta}")

    @property
    def nu(self) -> float:
        return self.alpha + self.beta

    @property
    def mu_bar(self) -> float:
        return self.alpha / self.nu

    @property
    def var_bar(self) -> float:
        nu = self.nu
        return self.alpha * self.beta / (nu * nu * (nu + 1.0))

    @property
    def sigma_bar(self) -> float:
        return math.sqrt(self.var_bar)


@dataclass(frozen=True)
class BetaPedestrian:
    """Eight-parameter pedestrian: support box plus per-axis beta shapes."""

    boundary: BBox
    x: BetaParams1D
    y: BetaParams1D

    def as_array(self) -> np.ndarray:
        """``[l, t, r, b, alpha_x, beta_x, alpha_y, beta_y]``."""
        return np.array(
            [*self.boundary.as_tuple(), self.x.alpha, self.x.beta, self.y.alpha, self.y.beta],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, v) -> "BetaPedestrian":
        v = [float(e) for e in v]
        if len(v) != 8:
            raise ValueError(f"expected 8 parameters, got {len(v)}")
        return cls(BBox(*v[:4]), BetaParams1D(v[4], v[5]), BetaParams1D(v[6], v[7]))

    def translate(self, dx: float, dy: float) -> "BetaPedestrian":
        return replace(self, boundary=self.boundary.translate(dx, dy))

    def scale(self, s: float) -> "BetaPedestrian":
        return replace(self, boundary=self.boundary.scale(s))


class ClampCounter:
    """Thread-safe tally of shape parameters pushed up to ``CLAMP_FLOOR``."""

    def __init__(self):
        self._lock = threading.Lock()
        self._clamped = 0
        self._total = 0

    def record(self, clamped: bool) -> None:
        with self._lock:
            self._total += 1
            self._clamped += int(clamped)

    def snapshot(self) -> tuple[int, int]:
        """``(clamped, total)`` conversions seen so far."""
        with self._lock:
            return self._clamped, self._total

    def reset(self) -> None:
        with self._lock:
            self._clamped = 0
            self._total = 0


clamp_counter = ClampCounter()


def _axis_interval(box: BBox, axis: str) -> tuple[float, float]:
    if axis == "x":
        return box.l, box.r
    if axis == "y":
        return box.t, box.b
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def weighted_moments(paired: PairedBoxes, cfg: WeightConfig = WeightConfig(), axis: str = "x") -> Moments1D:
    """Weighted mean and standard deviation of the visibility weight along ``axis``.

    The weight is ``cfg.w_visible`` over the visible interval and ``cfg.w_full``
    over the rest of the full interval, so every integral is a polynomial.
    Work is done on the full interval rescaled to ``[0, 1]`` to keep the
    variance free of cancellation for large pixel coordinates.
    """
    lo, hi = _axis_interval(paired.full, axis)
    vlo, vhi = _axis_interval(paired.visible, axis)
    width = hi - lo
    if not width > 0.0:
        raise GeometryError("full box has zero extent")
    if not vhi > vlo:
        raise GeometryError("visible box has zero extent")
    a = (vlo - lo) / width
    b = (vhi - lo) / width
    wf, dw = cfg.w_full, cfg.w_visible - cfg.w_full

    mass = wf + dw * (b - a)
    # offset of the visible centre from the full centre; exactly 0 for symmetric boxes
    off = ((vlo - lo) - (hi - vhi)) / (2.0 * width)
    m1 = 0.5 + dw * (b - a) * off / mass
    # central second moment: integrate (u - m1)^2 piecewise
    c0, c1 = -m1, 1.0 - m1
    ca, cb = a - m1, b - m1
    m2 = (wf * (c1**3 - c0**3) + dw * (cb**3 - ca**3)) / (3.0 * mass)
    return Moments1D(mu=lo + width * m1, sigma=width * math.sqrt(max(m2, 0.0)))


def moments_to_beta(
    m: Moments1D,
    lo: float,
    hi: float,
    cfg: WeightConfig = WeightConfig(),
    counter: ClampCounter | None = clamp_counter,
) -> BetaParams1D:
    """Shape parameters whose normalized mean/deviation match ``m`` on ``[lo, hi]``.

    Uses the beta moment identity ``nu = mu(1 - mu) / var - 1``.  Shapes at or
    below 1 are raised to ``CLAMP_FLOOR`` and the result is flagged ``clamped``.
    """
    if not hi > lo:
        raise GeometryError("empty interval")
    if not m.sigma > 0.0:
        raise InfeasibleMomentsError("sigma must be positive")
    span = hi - lo
    mu_bar = (m.mu - lo) / span
    sig_bar = cfg.lam * m.sigma / span
    var_bar = sig_bar * sig_bar
    spread = mu_bar * (1.0 - mu_bar)
    if not (0.0 < mu_bar < 1.0) or not var_bar < spread:
        raise InfeasibleMomentsError(
            f"no beta distribution has mean {mu_bar:.6g} and variance {var_bar:.6g}"
        )
    nu = spread / var_bar - 1.0
    alpha = mu_bar * nu
    beta = (1.0 - mu_bar) * nu
    clamped = False
    if alpha <= 1.0:
        alpha, clamped = CLAMP_FLOOR, True
    if beta <= 1.0:
        beta, clamped = CLAMP_FLOOR, True
    if counter is not None:
        counter.record(clamped)
    return BetaParams1D(alpha, beta, clamped=clamped)


def boxes_to_beta(
    paired: PairedBoxes,
    cfg: WeightConfig = WeightConfig(),
    counter: ClampCounter | None = clamp_counter,
) -> BetaPedestrian:
    full = paired.full
    px = moments_to_beta(weighted_moments(paired, cfg, "x"), full.l, full.r, cfg, counter)
    py = moments_to_beta(weighted_moments(paired, cfg, "y"), full.t, full.b, cfg, counter)
    return BetaPedestrian(full, px, py)


def beta_moments(p: BetaParams1D, lo: float, hi: float, cfg: WeightConfig = WeightConfig()) -> Moments1D:
    """De-normalized mean and pixel deviation implied by ``p`` on ``[lo, hi]``."""
    span = hi - lo
    return Moments1D(mu=lo + p.mu_bar * span, sigma=p.sigma_bar * span / cfg.lam)


def beta_to_visible_box(bp: BetaPedestrian, cfg: WeightConfig = WeightConfig()) -> BBox:
    """Approximate visible box: ``rho * sigma`` wide, centred on the mean, clipped to the boundary.

    This is not an exact inverse of :func:`boxes_to_beta`; the full-body weight
    pulls the mean towards the centre of the full box.
    """
    bd = bp.boundary
    mx = beta_moments(bp.x, bd.l, bd.r, cfg)
    my = beta_moments(bp.y, bd.t, bd.b, cfg)
    hw = 0.5 * cfg.rho * mx.sigma
    hh = 0.5 * cfg.rho * my.sigma
    box = BBox(mx.mu - hw, my.mu - hh, mx.mu + hw, my.mu + hh)
    return box.clip_to(bd)


def log_beta_fn(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _xlogy_pow(exponent: float, x: float) -> float:
    """``exponent * log(x)`` with the convention ``0 * log(0) = 0``."""
    if exponent == 0.0:
        return 0.0
    if x == 0.0:
        return -math.inf if exponent > 0 else math.inf
    return exponent * math.log(x)


def beta_logpdf_1d(x_norm: float, p: BetaParams1D) -> float:
    if not 0.0 <= x_norm <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x_norm}")
    return (
        _xlogy_pow(p.alpha - 1.0, x_norm)
        + _xlogy_pow(p.beta - 1.0, 1.0 - x_norm)
        - log_beta_fn(p.alpha, p.beta)
    )


def beta_pdf_1d(x_norm: float, p: BetaParams1D) -> float:
    """Beta density on ``[0, 1]``; endpoints take their limits (0, 1/B or inf)."""
    return math.exp(beta_logpdf_1d(x_norm, p))


def beta_pdf_2d(x: float, y: float, bp: BetaPedestrian) -> float:
    """Pixel-space density: integrates to one over the plane, zero off the boundary."""
    bd = bp.boundary
    if not (bd.l <= x <= bd.r and bd.t <= y <= bd.b):
        return 0.0
    xn = (x - bd.l) / bd.width
    yn = (y - bd.t) / bd.height
    return beta_pdf_1d(xn, bp.x) * beta_pdf_1d(yn, bp.y) / bd.area
