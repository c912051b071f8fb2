"""Pure numpy implementation of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` extension; used
when the extension is not built or ``BETAREP_PURE=1`` is set.

Pedestrians are packed as rows ``[l, t, r, b, alpha_x, beta_x, alpha_y, beta_y]``.
The symmetrized KL is taken on an ``n x n`` cell-centre grid spanning the union
of the two boundaries.  Each pedestrian's mass on that grid factors into an x
and a y marginal, and cells of zero density are raised to ``eps`` before
renormalizing.  Because the support of each factor is a product set, every
sum over the grid splits into per-axis sums, so a pair costs O(n), not O(n^2).
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def _axis_logpmf(lo, hi, n, blo, bhi, alpha, beta):
    """Row-normalized log-masses on ``n`` cell centres of ``[lo, hi]``; -inf off support."""
    h = (hi - lo) / n
    centers = lo[:, None] + (np.arange(n) + 0.5)[None, :] * h[:, None]
    xn = (centers - blo[:, None]) / (bhi - blo)[:, None]
    inside = (xn > 0.0) & (xn < 1.0)
    xs = np.where(inside, xn, 0.5)
    lp = (alpha[:, None] - 1.0) * np.log(xs) + (beta[:, None] - 1.0) * np.log1p(-xs)
    lp = np.where(inside, lp, -np.inf)

    empty = ~inside.any(axis=1)
    if empty.any():
        rows = np.flatnonzero(empty)
        mid = 0.5 * (blo[rows] + bhi[rows])
        k = np.clip(np.floor((mid - lo[rows]) / h[rows]).astype(np.int64), 0, n - 1)
        lp[rows, k] = 0.0

    mx = lp.max(axis=1, keepdims=True)
    lse = mx + np.log(np.exp(lp - mx).sum(axis=1, keepdims=True))
    return lp - lse


def _kl_dir(la, lb, lc, ld, n, eps):
    """KL(P || Q) for P = a (x) b and Q = c (x) d given per-axis log-masses."""
    leps = np.log(eps)
    A, B, C, D = (np.isfinite(v) for v in (la, lb, lc, ld))
    a = np.exp(la)
    b = np.exp(lb)
    AC, BD = A & C, B & D
    la0 = np.where(A, la, 0.0)
    lb0 = np.where(B, lb, 0.0)
    lc0 = np.where(C, lc, 0.0)
    ld0 = np.where(D, ld, 0.0)

    nA, nB, nC, nD = (v.sum(axis=1).astype(np.float64) for v in (A, B, C, D))
    nAC = AC.sum(axis=1).astype(np.float64)
    nBD = BD.sum(axis=1).astype(np.float64)
    ncell = float(n) * float(n)

    t_pp = (a * la0).sum(axis=1) + (b * lb0).sum(axis=1)
    xa = np.where(AC, a, 0.0).sum(axis=1)
    x_out = np.where(A & ~C, a, 0.0).sum(axis=1)
    x1 = (np.where(AC, a, 0.0) * lc0).sum(axis=1)
    yb = np.where(BD, b, 0.0).sum(axis=1)
    y_out = np.where(B & ~D, b, 0.0).sum(axis=1)
    y1 = (np.where(BD, b, 0.0) * ld0).sum(axis=1)
    lc_all = lc0.sum(axis=1)
    ld_all = ld0.sum(axis=1)
    lc_ac = np.where(AC, lc0, 0.0).sum(axis=1)
    ld_bd = np.where(BD, ld0, 0.0).sum(axis=1)

    zp = (ncell - nA * nB) * eps
    zq = (ncell - nC * nD) * eps
    s1 = t_pp + zp * leps
    outside = x_out + xa * y_out
    s2 = (
        x1 * yb
        + xa * y1
        + leps * outside
        + eps * (lc_all * nD + nC * ld_all - lc_ac * nBD - nAC * ld_bd)
        + eps * leps * (ncell - nA * nB - nC * nD + nAC * nBD)
    )
    return (s1 - s2) / (1.0 + zp) - np.log1p(zp) + np.log1p(zq)


def _sym_kl_rows(pa, pb, n, eps):
    lo_x = np.minimum(pa[:, 0], pb[:, 0])
    lo_y = np.minimum(pa[:, 1], pb[:, 1])
    hi_x = np.maximum(pa[:, 2], pb[:, 2])
    hi_y = np.maximum(pa[:, 3], pb[:, 3])
    ax = _axis_logpmf(lo_x, hi_x, n, pa[:, 0], pa[:, 2], pa[:, 4], pa[:, 5])
    ay = _axis_logpmf(lo_y, hi_y, n, pa[:, 1], pa[:, 3], pa[:, 6], pa[:, 7])
    bx = _axis_logpmf(lo_x, hi_x, n, pb[:, 0], pb[:, 2], pb[:, 4], pb[:, 5])
    by = _axis_logpmf(lo_y, hi_y, n, pb[:, 1], pb[:, 3], pb[:, 6], pb[:, 7])
    d1 = _kl_dir(ax, ay, bx, by, n, eps)
    d2 = _kl_dir(bx, by, ax, ay, n, eps)
    return 0.5 * (d1 + d2)


_CHUNK = 512


def sym_kl_one_to_many(ref, others, n, eps):
    """Symmetrized grid KL between ``ref`` (8,) and every row of ``others`` (m, 8)."""
    ref = np.asarray(ref, dtype=np.float64)
    others = np.asarray(others, dtype=np.float64).reshape(-1, 8)
    out = np.empty(len(others))
    for s in range(0, len(others), _CHUNK):
        blk = others[s : s + _CHUNK]
        out[s : s + len(blk)] = _sym_kl_rows(np.broadcast_to(ref, blk.shape), blk, n, eps)
    return out


def sym_kl_pairs(peds, pairs, n, eps):
    """Symmetrized grid KL for each index pair in ``pairs`` (m, 2)."""
    peds = np.asarray(peds, dtype=np.float64).reshape(-1, 8)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = np.empty(len(pairs))
    for s in range(0, len(pairs), _CHUNK):
        blk = pairs[s : s + _CHUNK]
        out[s : s + len(blk)] = _sym_kl_rows(peds[blk[:, 0]], peds[blk[:, 1]], n, eps)
    return out


def overlap_pairs(boxes):
    """Sorted ``(i, j)`` pairs, ``i < j``, whose boxes share positive area (sweep on ``l``)."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    order = np.argsort(boxes[:, 0], kind="stable")
    sb = boxes[order]
    stop = np.searchsorted(sb[:, 0], sb[:, 2], side="left")
    chunks = []
    for k in range(len(sb)):
        js = np.arange(k + 1, stop[k])
        if js.size == 0:
            continue
        ok = (np.minimum(sb[k, 3], sb[js, 3]) - np.maximum(sb[k, 1], sb[js, 1]) > 0.0) & (
            np.minimum(sb[k, 2], sb[js, 2]) - sb[js, 0] > 0.0
        )
        js = js[ok]
        if js.size:
            chunks.append(np.stack([np.full(js.size, order[k]), order[js]], axis=1))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    out = np.concatenate(chunks).astype(np.int64)
    out.sort(axis=1)
    return out[np.lexsort((out[:, 1], out[:, 0]))]
