"""Tensor-product B-spline models: evaluation and analytic differentiation.

A model lives on the unit parameter cube ``[0, 1]^d``; each axis carries its
own clamped knot vector and degree, and the control lattice is a plain
``ndarray`` whose axis ``l`` has ``n_l`` entries. A per-axis affine map ties
the parameter cube to the physical extent the data came from.

Every evaluation path uses only the ``(p+1)^d`` control window that is active
at the query point. Internally evaluation is batched over many points at once;
the scalar entry points are thin wrappers around the batched kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .exceptions import DomainError


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Clamped knot vector of a single axis.

    Parameters
    ----------
    degree : int
        Polynomial degree ``p`` (0 is permitted for derivative models).
    knots : array_like
        Nondecreasing knots in ``[0, 1]``; the first ``p+1`` are 0 and the
        last ``p+1`` are 1.
    """

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        p = int(self.degree)
        t = _readonly(self.knots)
        if p < 0:
            raise ValueError(f"degree must be >= 0, got {p}")
        if t.ndim != 1 or t.size < 2 * (p + 1):
            raise ValueError(f"a degree-{p} knot vector needs at least {2 * (p + 1)} knots")
        if not np.all(np.isfinite(t)):
            raise ValueError("knots must be finite")
        if np.any(np.diff(t) < 0):
            raise ValueError("knots must be nondecreasing")
        if np.any(t[: p + 1] != 0.0) or np.any(t[-(p + 1):] != 1.0):
            raise ValueError("knot vector must be clamped to [0, 1]")
        object.__setattr__(self, "degree", p)
        object.__setattr__(self, "knots", t)

    @classmethod
    def uniform(cls, n_controls: int, degree: int) -> "KnotVector":
        """Clamped knot vector with uniformly spaced interior knots."""
        if n_controls < degree + 1:
            raise ValueError(f"need at least {degree + 1} control points for degree {degree}")
        interior = np.linspace(0.0, 1.0, n_controls - degree + 1)[1:-1]
        return cls(degree, np.r_[np.zeros(degree + 1), interior, np.ones(degree + 1)])

    @property
    def n_controls(self) -> int:
        return self.knots.size - self.degree - 1

    def span_indices(self) -> np.ndarray:
        """Knot-interval indices ``j`` with ``t_j < t_{j+1}`` inside the domain."""
        p, t = self.degree, self.knots
        j = np.arange(p, self.n_controls)
        return j[t[j] < t[j + 1]]

    def find_span(self, u) -> np.ndarray:
        """Knot-interval index containing each ``u`` (vectorized).

        Values outside ``[0, 1]`` are mapped to the first or last interval,
        which evaluates the boundary polynomial piece by extension.
        """
        p, t = self.degree, self.knots
        j = np.searchsorted(t, u, side="right") - 1
        return np.clip(j, p, self.n_controls - 1)

    def derivative(self) -> "KnotVector":
        """Knot vector of the derivative spline (degree ``p-1``)."""
        if self.degree < 1:
            raise ValueError("cannot differentiate a degree-0 knot vector")
        return KnotVector(self.degree - 1, self.knots[1:-1])

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))


def _basis_batch(knots, p, span, u):
    """Nonzero basis values for a batch of points (Cox-de Boor triangle).

    Returns an array of shape ``(len(u), p+1)``; column ``r`` holds
    ``N_{span-p+r, p}(u)``.
    """
    u = np.asarray(u, dtype=float)
    m = u.shape[0]
    N = np.zeros((m, p + 1))
    N[:, 0] = 1.0
    if p == 0:
        return N
    left = np.empty((m, p + 1))
    right = np.empty((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = u - knots[span + 1 - j]
        right[:, j] = knots[span + j] - u
        saved = np.zeros(m)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


def _axis_basis(kv: KnotVector, u):
    """Return ``(first control index, basis values)`` for a batch of ``u``."""
    span = kv.find_span(u)
    return span - kv.degree, _basis_batch(kv.knots, kv.degree, span, u)


def _check_unit(u, d):
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 1
    U = np.atleast_2d(u)
    if U.ndim != 2 or U.shape[1] != d:
        raise ValueError(f"expected points with {d} coordinates, got shape {u.shape}")
    if not np.all(np.isfinite(U)) or np.any(U < 0.0) or np.any(U > 1.0):
        raise DomainError("parameter coordinates must lie in [0, 1]")
    return U, scalar


def basis_functions(kv: KnotVector, u: float):
    """Span index and the ``p+1`` nonzero basis values at ``u``.

    Parameters
    ----------
    kv : KnotVector
    u : float
        Parameter in ``[0, 1]``.

    Returns
    -------
    span : int
        Index ``j`` of the knot interval ``[t_j, t_{j+1})`` containing ``u``
        (the last interval is closed at 1).
    values : ndarray of shape (p+1,)
        ``N_{j-p,p}(u), ..., N_{j,p}(u)``.
    """
    if not np.isfinite(u) or u < 0.0 or u > 1.0:
        raise DomainError(f"u={u!r} is outside [0, 1]")
    span = int(kv.find_span(np.array([u]))[0])
    return span, _basis_batch(kv.knots, kv.degree, np.array([span]), np.array([u], float))[0]


def _contract(controls, starts, bases):
    """Sum the active control window against per-axis basis values."""
    d = controls.ndim
    n = starts[0].shape[0]
    index = []
    for a in range(d):
        width = bases[a].shape[1]
        shape = [n] + [1] * d
        shape[a + 1] = width
        index.append((starts[a][:, None] + np.arange(width)).reshape(shape))
    W = controls[tuple(index)]
    for a in reversed(range(d)):
        W = np.einsum("n...k,nk->n...", W, bases[a])
    return W


class TensorSplineModel:
    """Immutable tensor-product B-spline on ``[0, 1]^d``.

    Parameters
    ----------
    knot_vectors : sequence of KnotVector
        One per axis.
    controls : array_like
        Control lattice with ``controls.shape[l] == knot_vectors[l].n_controls``.
    extents : array_like of shape (d, 2), optional
        Physical ``(min, max)`` per axis. Defaults to the unit cube.
    source_samples : sequence of int, optional
        Sample counts of the grid the model was fitted to, if any. Used to
        express tolerances in source-grid cells.
    """

    def __init__(self, knot_vectors: Sequence[KnotVector], controls, extents=None,
                 source_samples=None):
        kvs = tuple(knot_vectors)
        P = _readonly(controls)
        d = len(kvs)
        if d < 1:
            raise ValueError("a model needs at least one axis")
        if P.ndim != d:
            raise ValueError(f"control lattice has {P.ndim} axes, expected {d}")
        for a, kv in enumerate(kvs):
            if P.shape[a] != kv.n_controls:
                raise ValueError(
                    f"axis {a}: lattice extent {P.shape[a]} != knots - degree - 1 = {kv.n_controls}")
        if extents is None:
            extents = [(0.0, 1.0)] * d
        E = _readonly(extents)
        if E.shape != (d, 2) or np.any(E[:, 1] <= E[:, 0]):
            raise ValueError("extents must be (d, 2) with max > min on every axis")
        self._kvs = kvs
        self._controls = P
        self._extents = E
        self._source_samples = None if source_samples is None else tuple(int(m) for m in source_samples)

    @classmethod
    def uniform(cls, controls, degree, extents=None, source_samples=None):
        """Model with clamped uniform knots on every axis."""
        P = np.asarray(controls, dtype=float)
        kvs = [KnotVector.uniform(n, degree) for n in P.shape]
        return cls(kvs, P, extents, source_samples)

    @property
    def knot_vectors(self) -> tuple:
        return self._kvs

    @property
    def controls(self) -> np.ndarray:
        return self._controls

    @property
    def extents(self) -> np.ndarray:
        return self._extents

    @property
    def source_samples(self):
        return self._source_samples

    @property
    def dim(self) -> int:
        return len(self._kvs)

    @property
    def degrees(self) -> tuple:
        return tuple(kv.degree for kv in self._kvs)

    @property
    def shape(self) -> tuple:
        return self._controls.shape

    def with_controls(self, controls) -> "TensorSplineModel":
        return TensorSplineModel(self._kvs, controls, self._extents, self._source_samples)

    def to_parameter(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self._extents[:, 0], self._extents[:, 1]
        return (x - lo) / (hi - lo)

    def to_physical(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self._extents[:, 0], self._extents[:, 1]
        return lo + u * (hi - lo)

    def source_cell(self):
        """Physical cell size of the source grid per axis, or None."""
        if self._source_samples is None:
            return None
        m = np.asarray(self._source_samples, dtype=float)
        return (self._extents[:, 1] - self._extents[:, 0]) / (m - 1)

    def _evaluate_unchecked(self, U):
        starts, bases = zip(*(_axis_basis(kv, U[:, a]) for a, kv in enumerate(self._kvs)))
        return _contract(self._controls, starts, bases)

    def __call__(self, u):
        return evaluate(self, u)

    def __repr__(self):
        return f"TensorSplineModel(dim={self.dim}, degrees={self.degrees}, shape={self.shape})"


def evaluate(model: TensorSplineModel, u):
    """Evaluate the model at parameter point(s).

    ``u`` may be a single point of shape ``(d,)`` (returns a float) or a batch
    of shape ``(n, d)`` (returns an array). Raises DomainError outside
    ``[0, 1]^d``.
    """
    U, scalar = _check_unit(u, model.dim)
    values = model._evaluate_unchecked(U)
    return float(values[0]) if scalar else values


def evaluate_grid(model: TensorSplineModel, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate on the tensor grid spanned by per-axis parameter arrays.

    Uses the separable structure: one banded collocation matrix per axis,
    contracted against the control lattice.
    """
    if len(axes) != model.dim:
        raise ValueError(f"expected {model.dim} axis arrays")
    out = model.controls
    for a, (kv, ua) in enumerate(zip(model.knot_vectors, axes)):
        ua = np.asarray(ua, dtype=float)
        _check_unit(ua[:, None], 1)
        C = collocation_matrix(kv, ua)
        out = np.moveaxis(np.tensordot(C, out, axes=([1], [a])), 0, a)
    return out


def collocation_matrix(kv: KnotVector, u) -> np.ndarray:
    """Dense ``(len(u), n_controls)`` matrix of basis values at ``u``."""
    u = np.asarray(u, dtype=float)
    start, B = _axis_basis(kv, u)
    C = np.zeros((u.size, kv.n_controls))
    rows = np.arange(u.size)[:, None]
    C[rows, start[:, None] + np.arange(kv.degree + 1)] = B
    return C


def derivative_model(model: TensorSplineModel, axis: int) -> TensorSplineModel:
    """Exact B-spline representation of the partial derivative along ``axis``.

    The result has degree ``p-1`` and one fewer control point on ``axis``.
    Coefficients are ``p / (t_{j+p+1} - t_{j+1}) * (P_{j+1} - P_j)``; a zero
    knot difference (repeated knots) yields a zero coefficient.
    """
    kv = model.knot_vectors[axis]
    p, t, n = kv.degree, kv.knots, kv.n_controls
    if p < 1:
        raise ValueError(f"axis {axis} has degree 0; nothing to differentiate")
    denom = t[p + 1 : n + p] - t[1:n]
    safe = np.where(denom > 0, denom, 1.0)
    scale = np.where(denom > 0, p / safe, 0.0)
    shape = [1] * model.dim
    shape[axis] = n - 1
    P = np.diff(model.controls, axis=axis) * scale.reshape(shape)
    kvs = list(model.knot_vectors)
    kvs[axis] = kv.derivative()
    return TensorSplineModel(kvs, P, model.extents, model.source_samples)


@dataclass(frozen=True, eq=False)
class DerivativeSet:
    """First and second partial-derivative models of one spline.

    ``first[l]`` is the derivative along ``l``; ``second[(l, m)]`` with
    ``l <= m`` the mixed second derivative. Only the upper triangle is built,
    so Hessians assembled from it are exactly symmetric.
    """

    model: TensorSplineModel
    first: tuple
    second: dict = field(repr=False)

    @classmethod
    def build(cls, model: TensorSplineModel) -> "DerivativeSet":
        if min(model.degrees) < 2:
            raise ValueError("second derivatives need degree >= 2 on every axis")
        first = tuple(derivative_model(model, a) for a in range(model.dim))
        second = {(l, m): derivative_model(first[l], m)
                  for l, m in combinations_with_replacement(range(model.dim), 2)}
        return cls(model, first, second)

    def _bases(self, U):
        # derivative models of equal degree on an axis share a knot vector
        cache = {}

        def get(axis, kv):
            key = (axis, kv.degree)
            if key not in cache:
                cache[key] = _axis_basis(kv, U[:, axis])
            return cache[key]

        return get

    def _eval(self, m, get):
        starts, bases = zip(*(get(a, kv) for a, kv in enumerate(m.knot_vectors)))
        return _contract(m.controls, starts, bases)

    def gradient_hessian(self, U, with_value=False):
        """Batched gradient ``(n, d)`` and Hessian ``(n, d, d)`` at ``U``.

        No domain check: points outside the cube evaluate the boundary
        polynomial pieces, which Newton iterations rely on.
        """
        U = np.atleast_2d(np.asarray(U, dtype=float))
        d = self.model.dim
        get = self._bases(U)
        G = np.empty((U.shape[0], d))
        H = np.empty((U.shape[0], d, d))
        for l in range(d):
            G[:, l] = self._eval(self.first[l], get)
        for (l, m), dm in self.second.items():
            H[:, l, m] = self._eval(dm, get)
            H[:, m, l] = H[:, l, m]
        if with_value:
            return G, H, self._eval(self.model, get)
        return G, H


def gradient_and_hessian(model: TensorSplineModel, derivs: DerivativeSet | None, u):
    """Analytic gradient and Hessian at a single parameter point."""
    if derivs is None:
        derivs = DerivativeSet.build(model)
    U, _ = _check_unit(u, model.dim)
    G, H = derivs.gradient_hessian(U)
    return G[0], H[0]


@dataclass(frozen=True)
class KnotSpan:
    """One positive-width knot span.

    ``start[l]`` is the first control index of the span's window along ``l``;
    the window is ``start[l] .. start[l] + p_l``.
    """

    start: tuple
    lower: tuple
    upper: tuple
    degrees: tuple

    @property
    def window(self) -> tuple:
        return tuple(slice(s, s + p + 1) for s, p in zip(self.start, self.degrees))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def contains(self, u) -> bool:
        """Half-open membership; closed on faces that touch ``u = 1``."""
        u = np.asarray(u, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        upper_ok = np.where(hi >= 1.0, u <= hi, u < hi)
        return bool(np.all((u >= lo) & upper_ok))


@dataclass(frozen=True, eq=False)
class SpanTable:
    """Array form of the positive-width spans, in lexicographic order."""

    start: np.ndarray  # (S, d) first control index
    lower: np.ndarray  # (S, d)
    upper: np.ndarray  # (S, d)
    degrees: tuple

    def __len__(self):
        return self.start.shape[0]

    def span(self, i) -> KnotSpan:
        return KnotSpan(tuple(int(s) for s in self.start[i]), tuple(self.lower[i].tolist()),
                        tuple(self.upper[i].tolist()), self.degrees)

    def subset(self, idx) -> "SpanTable":
        idx = np.asarray(idx, dtype=int)
        return SpanTable(self.start[idx], self.lower[idx], self.upper[idx], self.degrees)


def span_table(model: TensorSplineModel) -> SpanTable:
    per_axis = [kv.span_indices() for kv in model.knot_vectors]
    grids = np.meshgrid(*per_axis, indexing="ij")
    J = np.stack([g.ravel() for g in grids], axis=1) if grids else np.zeros((0, 0), int)
    lower = np.empty(J.shape)
    upper = np.empty(J.shape)
    start = np.empty(J.shape, dtype=int)
    for a, kv in enumerate(model.knot_vectors):
        lower[:, a] = kv.knots[J[:, a]]
        upper[:, a] = kv.knots[J[:, a] + 1]
        start[:, a] = J[:, a] - kv.degree
    return SpanTable(start, lower, upper, model.degrees)


def enumerate_spans(model: TensorSplineModel) -> list:
    """All positive-width knot spans in lexicographic order."""
    table = span_table(model)
    return [table.span(i) for i in range(len(table))]
