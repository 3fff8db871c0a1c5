"""Spatial-hash removal of near-duplicate points.

Coordinates are scaled by ``1 / (20 tau)`` and rounded both down and up on
every axis, giving ``2^d`` integer cells per point. Two points closer than
``tau`` always share at least one of those cells, so probing them finds
every duplicate. Processing is greedy in input order: the first point of a
cluster survives.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
CELL_FACTOR = 20.0


def _mix64(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def hash_keys(index) -> np.ndarray:
    """64-bit bucket keys for integer index tuples, shape ``(n, d) -> (n,)``.

    Per-axis values are mixed and folded in sequentially with the
    ``hash_combine`` recurrence, then finalized with a splitmix64 round.
    """
    index = np.ascontiguousarray(np.atleast_2d(index), dtype=np.int64)
    seed = np.zeros(index.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for a in range(index.shape[1]):
            h = _mix64(index[:, a].view(np.uint64))
            seed ^= h + _GOLDEN + (seed << np.uint64(6)) + (seed >> np.uint64(2))
        return _mix64(seed)


def candidate_indices(X, tau: float) -> np.ndarray:
    """All floor/ceil cell indices per point, shape ``(n, 2^d, d)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = X / (CELL_FACTOR * tau)
    lo, hi = np.floor(k).astype(np.int64), np.ceil(k).astype(np.int64)
    d = X.shape[1]
    combos = np.array(list(product((0, 1), repeat=d)), dtype=bool)  # (2^d, d)
    return np.where(combos[None, :, :], hi[:, None, :], lo[:, None, :])


def dedup_indices(X, tau: float) -> list:
    """Indices of the points kept by greedy first-wins deduplication."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n == 0:
        return []
    cand = candidate_indices(X, tau)
    keys = hash_keys(cand.reshape(-1, X.shape[1])).reshape(n, -1).tolist()
    pts = [tuple(row) for row in X.tolist()]
    buckets: dict = {}
    keep = []
    for i in range(n):
        mine = set(keys[i])
        duplicate = False
        for key in mine:
            for j in buckets.get(key, ()):
                if math.dist(pts[i], pts[j]) < tau:
                    duplicate = True
                    break
            if duplicate:
                break
        if not duplicate:
            keep.append(i)
            for key in mine:
                buckets.setdefault(key, []).append(i)
    return keep


def dedup(points, tau: float) -> list:
    """Drop points within ``tau`` of an earlier survivor.

    ``points`` is a sequence of objects with a ``location`` attribute in
    parameter coordinates, or an ``(n, d)`` array.
    """
    if isinstance(points, np.ndarray):
        return [points[i] for i in dedup_indices(points, tau)]
    points = list(points)
    if not points:
        return []
    X = np.array([p.location for p in points], dtype=float)
    return [points[i] for i in dedup_indices(X, tau)]


def default_tau(sample_counts) -> float:
    """0.999 of the smallest source-grid cell, in parameter units."""
    m = np.asarray(sample_counts, dtype=float)
    return 0.999 * float(np.min(1.0 / (m - 1)))
