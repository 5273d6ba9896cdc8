"""Suprema of difference quotients over point pairs on the periodic grid.

For a displacement ``d`` on the torus the maximum of ``|f(p + d) - f(p)|``
over all base points ``p`` is exact and cheap.  Exhaustive mode takes every
displacement; sampled mode takes a coarse sublattice, all short
displacements and a seeded random set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial.distance import pdist

EXHAUSTIVE_MAX_N = 48


@dataclass
class PairResult:
    value: float
    witness: tuple | None
    n_pairs: int
    exhaustive: bool
    plan: dict


def _displacements(n, mode, seed, short=4, n_random=64):
    if mode == "exhaustive" or (mode == "auto" and n <= EXHAUSTIVE_MAX_N):
        dx, dy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return dx.ravel(), dy.ravel(), True, {"mode": "exhaustive"}
    stride = max(1, n // 16)
    lat = np.arange(0, n, stride)
    sx, sy = np.meshgrid(lat, lat, indexing="ij")
    near = np.arange(-short, short + 1) % n
    nx, ny = np.meshgrid(near, near, indexing="ij")
    rng = np.random.default_rng(seed)
    rx, ry = rng.integers(0, n, size=(2, n_random))
    dx = np.concatenate([sx.ravel(), nx.ravel(), rx])
    dy = np.concatenate([sy.ravel(), ny.ravel(), ry])
    key = np.unique(dx * n + dy)
    plan = {"mode": "sampled", "stride": int(stride), "short_radius": short,
            "n_random": n_random, "seed": seed}
    return key // n, key % n, False, plan


def torus_sup(f, L, omega_fn, *, mode="auto", seed=0) -> PairResult:
    """``sup |f(x) - f(y)| / omega(dist(x, y))`` over grid pairs on the torus."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if f.shape != (n, n):
        raise ValueError("field must be square")
    dxs, dys, exhaustive, plan = _displacements(n, mode, seed)
    nz = (dxs != 0) | (dys != 0)
    dxs, dys = dxs[nz], dys[nz]
    h = L / n
    dist = h * np.hypot(np.minimum(dxs, n - dxs), np.minimum(dys, n - dys))
    om = np.asarray(omega_fn(dist), dtype=float)

    best, witness = -np.inf, None
    for dx in np.unique(dxs):
        sel = dxs == dx
        cols = dys[sel]
        shifted = np.roll(f, -int(dx), axis=0)
        doubled = np.concatenate([shifted, shifted], axis=1)
        win = sliding_window_view(doubled, n, axis=1)[:, :n, :]   # win[r, j, k] = shifted[r, (j+k) % n]
        diff = np.abs(win[:, :, cols] - f[:, :, None])
        flat = diff.reshape(n * n, cols.size)
        arg = flat.argmax(axis=0)
        mx = flat[arg, np.arange(cols.size)]
        ratio = mx / om[sel]
        k = int(np.argmax(ratio))
        if ratio[k] > best:
            best = float(ratio[k])
            r, j = divmod(int(arg[k]), n)
            witness = ((r, j), ((r + int(dx)) % n, (j + int(cols[k])) % n), float(dist[sel][k]))
    return PairResult(best, witness, int(dxs.size) * n * n, exhaustive, plan)


def point_cloud_sup(values, points, omega_fn) -> PairResult:
    """Same supremum over all pairs of an explicit point cloud (Euclidean)."""
    values = np.asarray(values, dtype=float).ravel()
    points = np.asarray(points, dtype=float).reshape(values.size, -1)
    if values.size < 2:
        return PairResult(0.0, None, 0, True, {"mode": "points"})
    d = pdist(points)
    df = pdist(values[:, None])
    ok = d > 0
    ratio = np.where(ok, df / np.where(ok, omega_fn(np.where(ok, d, 1.0)), 1.0), 0.0)
    k = int(np.argmax(ratio))
    i, j = _pair_index(k, values.size)
    return PairResult(float(ratio[k]), (i, j, float(d[k])), int(d.size), True, {"mode": "points"})


def _pair_index(k, m):
    # invert the condensed pdist index
    i = int(m - 2 - np.floor(np.sqrt(-8 * k + 4 * m * (m - 1) - 7) / 2.0 - 0.5))
    j = int(k + i + 1 - m * (m - 1) // 2 + (m - i) * ((m - i) - 1) // 2)
    return i, j
