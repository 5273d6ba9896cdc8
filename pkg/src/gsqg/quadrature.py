"""Batched adaptive Gauss-Kronrod (G7/K15) quadrature.

Many independent integrals (one per grid point ``xi`` of a certificate) are
refined together: every round evaluates the integrand once on all segments
that still need work, so the Python overhead is per round and not per
segment.  Integrands receive the physical nodes and the index of the problem
each node belongs to.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

# Kronrod 15-point nodes on [-1, 1] (non-negative half) and weights, with the
# embedded 7-point Gauss weights for the odd-indexed nodes.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are xk[1], xk[3], xk[5], xk[7] and their mirrors.
for _i, _w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[_i] = _w
    GAUSS_WEIGHTS[14 - _i] = _w
GAUSS_WEIGHTS[7] = _WG[3]


@dataclass
class BatchResult:
    value: np.ndarray
    error: np.ndarray
    n_segments: np.ndarray
    converged: np.ndarray


def _rule(f, lo, hi, pid):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x, np.broadcast_to(pid[:, None], x.shape)), dtype=float)
    if not np.all(np.isfinite(fx)):
        bad = np.unique(pid[~np.all(np.isfinite(fx), axis=1)])
        raise QuadratureError(
            f"integrand returned non-finite values for problems {bad[:5].tolist()}")
    k = half * (fx @ KRONROD_WEIGHTS)
    g = half * (fx @ GAUSS_WEIGHTS)
    return k, np.abs(k - g)


def integrate_segments(f, lo, hi, pid, n_problems, *, rtol=1e-10, atol=0.0,
                       max_rounds=80, max_segments=4_000_000,
                       raise_on_failure=True) -> BatchResult:
    """Integrate ``f`` over a union of segments per problem.

    ``lo``, ``hi`` and ``pid`` describe the initial partition: segment ``i``
    contributes to problem ``pid[i]``.  Callers put integrand kinks on
    segment ends.  A problem is done once its summed error estimate is below
    ``max(atol, rtol * |value|)``; until then every segment whose error
    exceeds its length-proportional share of that tolerance is bisected.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    pid = np.asarray(pid, dtype=np.intp)
    keep = hi > lo
    lo, hi, pid = lo[keep], hi[keep], pid[keep]
    span = np.bincount(pid, hi - lo, minlength=n_problems)

    val_seg, err_seg = _rule(f, lo, hi, pid)
    done = np.zeros(n_problems, dtype=bool)
    for _ in range(max_rounds):
        value = np.bincount(pid, val_seg, minlength=n_problems)
        error = np.bincount(pid, err_seg, minlength=n_problems)
        tol = np.maximum(atol, rtol * np.abs(value))
        done = error <= tol
        if done.all():
            break
        share = tol[pid] * (hi - lo) / np.where(span[pid] > 0, span[pid], 1.0)
        split = (~done[pid]) & (err_seg > share)
        # segments at floating-point resolution cannot be refined further
        split &= (hi - lo) > 64 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))
        if not split.any():
            break
        if lo.size + split.sum() > max_segments:
            break
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_pid = np.concatenate([pid[split], pid[split]])
        nv, ne = _rule(f, new_lo, new_hi, new_pid)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        pid = np.concatenate([pid[keep], new_pid])
        val_seg = np.concatenate([val_seg[keep], nv])
        err_seg = np.concatenate([err_seg[keep], ne])

    value = np.bincount(pid, val_seg, minlength=n_problems)
    error = np.bincount(pid, err_seg, minlength=n_problems)
    done = error <= np.maximum(atol, rtol * np.abs(value))
    nseg = np.bincount(pid, minlength=n_problems)
    if raise_on_failure and not done.all():
        bad = np.flatnonzero(~done)
        raise QuadratureError(
            f"adaptive quadrature did not converge for {bad.size} of "
            f"{n_problems} integrals (first index {bad[0]})",
            partial=value, error=error)
    return BatchResult(value, error, nseg, done)


def partition(lo, hi, cuts):
    """Split ``[lo[p], hi[p]]`` at the finite entries of ``cuts[p, :]``.

    Returns flat ``(seg_lo, seg_hi, pid)`` arrays; cut points outside the
    open interval are ignored.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    cuts = np.asarray(cuts, dtype=float).reshape(n, -1)
    inside = np.isfinite(cuts) & (cuts > lo[:, None]) & (cuts < hi[:, None])
    c = np.where(inside, cuts, np.inf)
    pts = np.sort(np.concatenate([lo[:, None], c, hi[:, None]], axis=1), axis=1)
    edges = np.where(np.isinf(pts), np.nan, pts)
    seg_lo = edges[:, :-1]
    seg_hi = edges[:, 1:]
    ok = np.isfinite(seg_lo) & np.isfinite(seg_hi) & (seg_hi > seg_lo)
    pid = np.broadcast_to(np.arange(n)[:, None], seg_lo.shape)
    return seg_lo[ok], seg_hi[ok], pid[ok]
