"""Piecewise-linear critical points of a spline sampled on a grid.

The sample lattice is triangulated with the Freudenthal (Kuhn) scheme: every
grid cube splits into ``d!`` simplices along the main diagonal. In that
triangulation a vertex's link is fixed up to translation, with
``2 (2^d - 1)`` neighbours, so the lower/upper link test for a vertex only
depends on which neighbours are lower. All ``2^k`` patterns are classified
once into a lookup table of connected-component counts.

Vertex values are totally ordered by ``(value, linear index)`` so ties are
broken consistently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .exceptions import UnsupportedDimensionError
from .spline import TensorSplineModel, evaluate_grid


@lru_cache(maxsize=None)
def link_structure(d: int):
    """Neighbour offsets and link edges of a vertex in the Kuhn triangulation.

    Returns
    -------
    offsets : tuple of tuple
        Neighbour offsets in lexicographic order.
    faces : tuple of tuple
        Link simplices (each a tuple of neighbour positions).
    edges : tuple of (int, int)
        Link edges between neighbour positions.
    """
    faces = set()
    for origin in product((-1, 0), repeat=d):
        for perm in permutations(range(d)):
            v = list(origin)
            simplex = [tuple(v)]
            for axis in perm:
                v[axis] += 1
                simplex.append(tuple(v))
            zero = (0,) * d
            if zero in simplex:
                faces.add(tuple(sorted(s for s in simplex if s != zero)))
    offsets = tuple(sorted({o for f in faces for o in f}))
    pos = {o: i for i, o in enumerate(offsets)}
    faces_idx = tuple(sorted(tuple(pos[o] for o in f) for f in faces))
    edges = sorted({(min(f[a], f[b]), max(f[a], f[b]))
                    for f in faces_idx for a in range(len(f)) for b in range(a + 1, len(f))})
    return offsets, faces_idx, tuple(edges)


def _components(members, edges, k):
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        if members[a] and members[b]:
            parent[find(a)] = find(b)
    return len({find(i) for i in range(k) if members[i]})


@lru_cache(maxsize=None)
def link_table(d: int):
    """Lower and upper link component counts for every neighbour bitmask.

    Bit ``i`` of the mask is set when neighbour ``i`` is lower than the vertex.
    """
    offsets, _, edges = link_structure(d)
    k = len(offsets)
    n_lower = np.zeros(1 << k, dtype=np.int8)
    n_upper = np.zeros(1 << k, dtype=np.int8)
    for mask in range(1 << k):
        lower = [(mask >> i) & 1 == 1 for i in range(k)]
        n_lower[mask] = _components(lower, edges, k)
        n_upper[mask] = _components([not b for b in lower], edges, k)
    n_lower.setflags(write=False)
    n_upper.setflags(write=False)
    return n_lower, n_upper


def _check_dim(d):
    if d not in (2, 3):
        raise UnsupportedDimensionError(f"PL extraction supports d in {{2, 3}}, got {d}")


def lower_masks(values: np.ndarray, periodic: bool = False) -> np.ndarray:
    """Neighbour-lower bitmask for each interior vertex (or every vertex if periodic)."""
    V = np.asarray(values, dtype=float)
    d = V.ndim
    _check_dim(d)
    offsets, _, _ = link_structure(d)
    strides = np.cumprod((V.shape[1:] + (1,))[::-1])[::-1]
    if periodic:
        core = V
    else:
        core = V[(slice(1, -1),) * d]
    mask = np.zeros(core.shape, dtype=np.int32)
    for bit, off in enumerate(offsets):
        if periodic:
            nb = np.roll(V, tuple(-o for o in off), axis=tuple(range(d)))
            # linear-index tie-break on the torus uses the wrapped index
            idx = np.arange(V.size).reshape(V.shape)
            tie_lower = np.roll(idx, tuple(-o for o in off), axis=tuple(range(d))) < idx
        else:
            nb = V[tuple(slice(1 + o, V.shape[a] - 1 + o) for a, o in enumerate(off))]
            tie_lower = int(np.dot(off, strides)) < 0
        lower = (nb < core) | ((nb == core) & tie_lower)
        mask |= lower.astype(np.int32) << bit
    return mask


def classify_vertices(values: np.ndarray, periodic: bool = False):
    """Component counts of the lower and upper link per vertex.

    Returns ``(n_lower, n_upper)`` arrays over interior vertices (all vertices
    when ``periodic``). Minimum: ``n_lower == 0``; maximum: ``n_upper == 0``;
    regular: both equal 1; otherwise a saddle.
    """
    V = np.asarray(values, dtype=float)
    _check_dim(V.ndim)
    table_lower, table_upper = link_table(V.ndim)
    m = lower_masks(V, periodic)
    return table_lower[m], table_upper[m]


@dataclass(frozen=True, eq=False)
class SampledGrid:
    """Spline values on a uniform vertex lattice over the parameter cube."""

    values: np.ndarray
    axes: tuple
    extents: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape


@dataclass(frozen=True)
class PLCriticalPoint:
    vertex: tuple
    location: tuple
    physical: tuple
    value: float
    index: int
    kind: str
    boundary: bool = False
    n_lower: int = 0
    n_upper: int = 0


def upsampled_resolution(source_counts, ratio: float) -> tuple:
    """Per-axis vertex counts for a volume upsampling ratio.

    A ratio of ``10^d`` refines every source cell tenfold per axis, keeping
    the source vertices in the lattice.
    """
    counts = tuple(int(m) for m in source_counts)
    factor = int(round(float(ratio) ** (1.0 / len(counts))))
    if factor < 1:
        raise ValueError("ratio must be >= 1")
    return tuple(factor * (m - 1) + 1 for m in counts)


def sample_grid(model: TensorSplineModel, resolution) -> SampledGrid:
    """Evaluate ``model`` on a uniform lattice with the given vertex counts."""
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (model.dim,))
    if np.any(res < 2):
        raise ValueError("resolution must be >= 2 on every axis")
    axes = tuple(np.linspace(0.0, 1.0, int(r)) for r in res)
    return SampledGrid(evaluate_grid(model, axes), axes, model.extents)


def _pl_kind(n_lower, n_upper, d):
    if n_lower == 0:
        return 0, "minimum"
    if n_upper == 0:
        return d, "maximum"
    if d == 2 or n_lower > 1:
        return 1, "saddle"
    return 2, "saddle"


def pl_critical_points(grid: SampledGrid, include_boundary: bool = False) -> list:
    """Critical vertices of the PL interpolant, ordered by vertex index.

    Interior vertices are classified by the lower/upper link test. With
    ``include_boundary`` also returns boundary vertices that are extrema
    among their existing neighbours, flagged ``boundary=True``.
    """
    V = grid.values
    d = V.ndim
    _check_dim(d)
    n_lower, n_upper = classify_vertices(V)
    critical = ~((n_lower == 1) & (n_upper == 1))
    found = [(tuple(int(i) + 1 for i in idx), int(n_lower[idx]), int(n_upper[idx]), False)
             for idx in zip(*np.nonzero(critical))]
    if include_boundary:
        found.extend(_boundary_extrema(V))
    found.sort(key=lambda r: np.ravel_multi_index(r[0], V.shape))
    lo, hi = grid.extents[:, 0], grid.extents[:, 1]
    out = []
    for vertex, nl, nu, bnd in found:
        u = np.array([grid.axes[a][vertex[a]] for a in range(d)])
        lam, kind = _pl_kind(nl, nu, d)
        out.append(PLCriticalPoint(vertex, tuple(u.tolist()), tuple((lo + u * (hi - lo)).tolist()),
                                   float(V[vertex]), lam, kind, bnd, nl, nu))
    return out


def _boundary_extrema(V):
    d = V.ndim
    offsets, _, _ = link_structure(d)
    strides = np.cumprod((V.shape[1:] + (1,))[::-1])[::-1]
    pad = np.pad(V, 1, constant_values=np.nan)
    core = (slice(1, -1),) * d
    any_lower = np.zeros(V.shape, bool)
    any_upper = np.zeros(V.shape, bool)
    for off in offsets:
        nb = pad[tuple(slice(1 + o, pad.shape[a] - 1 + o) for a, o in enumerate(off))]
        tie_lower = int(np.dot(off, strides)) < 0
        present = ~np.isnan(nb)
        lower = present & ((nb < V) | ((nb == V) & tie_lower))
        any_lower |= lower
        any_upper |= present & ~lower
    on_boundary = np.zeros(V.shape, bool)
    on_boundary[...] = True
    on_boundary[core] = False
    out = []
    for idx in zip(*np.nonzero(on_boundary & (~any_lower | ~any_upper))):
        nl, nu = int(any_lower[idx]), int(any_upper[idx])
        out.append((tuple(int(i) for i in idx), nl, nu, True))
    return out
