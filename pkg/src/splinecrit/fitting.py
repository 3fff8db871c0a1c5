"""Least-squares fitting of tensor-product B-splines to gridded samples.

Grid samples make the collocation matrix a Kronecker product of per-axis
matrices, so the least-squares problem separates: the control lattice is the
sample raster with one per-axis normal-equation solve applied along each axis
in turn. No global dense system is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import FitError
from .spline import KnotVector, TensorSplineModel, collocation_matrix, evaluate_grid

# normal matrices this ill-conditioned are treated as rank deficient
_COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class GridScalarField:
    """Scalar samples on an axis-aligned uniform grid.

    Parameters
    ----------
    values : ndarray
        Raster of shape ``(m_1, ..., m_d)``; row-major, last axis fastest.
    extents : array_like of shape (d, 2)
        Physical ``(min, max)`` coordinate of the first and last sample on
        each axis.
    """

    values: np.ndarray
    extents: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        e = np.array(self.extents, dtype=float, copy=True).reshape(-1, 2)
        if v.ndim < 1 or e.shape[0] != v.ndim:
            raise ValueError(f"extents must have one (min, max) row per axis ({v.ndim})")
        if any(m < 2 for m in v.shape):
            raise ValueError("every axis needs at least 2 samples")
        if np.any(e[:, 1] <= e[:, 0]):
            raise ValueError("extents must have max > min")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "extents", e)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def cell(self) -> np.ndarray:
        return (self.extents[:, 1] - self.extents[:, 0]) / (np.asarray(self.shape) - 1)

    def parameter_axes(self) -> list:
        return [np.linspace(0.0, 1.0, m) for m in self.shape]

    def physical_axes(self) -> list:
        return [np.linspace(lo, hi, m) for (lo, hi), m in zip(self.extents, self.shape)]


@dataclass(frozen=True)
class FitReport:
    rms_error: float
    max_error: float
    rounds: int
    n_controls: tuple
    rms_history: tuple = field(default=())


def _axis_solver(kv: KnotVector, u, axis):
    C = collocation_matrix(kv, u)
    A = C.T @ C
    if np.linalg.cond(A) > _COND_LIMIT:
        raise FitError(
            f"axis {axis}: normal equations are rank deficient "
            f"({kv.n_controls} control points, {len(u)} samples)", axis=axis)
    try:
        factor = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as exc:
        raise FitError(f"axis {axis}: normal equations are not positive definite", axis=axis) from exc
    return C, factor


def _solve(field: GridScalarField, kvs) -> tuple:
    P = field.values
    for a, (kv, u) in enumerate(zip(kvs, field.parameter_axes())):
        if kv.n_controls > len(u):
            raise FitError(f"axis {a}: {kv.n_controls} control points exceed {len(u)} samples", axis=a)
        C, factor = _axis_solver(kv, u, a)
        rhs = np.tensordot(C.T, P, axes=([1], [a]))
        P = np.moveaxis(linalg.cho_solve(factor, rhs.reshape(rhs.shape[0], -1)).reshape(rhs.shape), 0, a)
    model = TensorSplineModel(kvs, P, field.extents, field.shape)
    resid = evaluate_grid(model, field.parameter_axes()) - field.values
    return model, resid


def fit_fixed(field: GridScalarField, degree: int, n_controls, knot_vectors=None):
    """Best-fit model for a fixed knot layout.

    Parameters
    ----------
    field : GridScalarField
    degree : int
    n_controls : int or sequence of int
        Control points per axis; uniform clamped knots are used unless
        ``knot_vectors`` is given.
    knot_vectors : sequence of KnotVector, optional

    Returns
    -------
    (TensorSplineModel, FitReport)
    """
    if knot_vectors is None:
        n = np.broadcast_to(np.asarray(n_controls, dtype=int), (field.dim,))
        for a, na in enumerate(n):
            if na < degree + 1:
                raise FitError(f"axis {a}: need at least {degree + 1} control points", axis=a)
        knot_vectors = [KnotVector.uniform(int(na), degree) for na in n]
    model, resid = _solve(field, list(knot_vectors))
    rms = float(np.sqrt(np.mean(resid ** 2)))
    report = FitReport(rms, float(np.max(np.abs(resid))), 0, model.shape, (rms,))
    return model, report


def _insert_midpoint(kv: KnotVector, u):
    j = int(kv.find_span(np.array([u]))[0])
    lo, hi = kv.knots[j], kv.knots[j + 1]
    return KnotVector(kv.degree, np.insert(kv.knots, j + 1, 0.5 * (lo + hi))), (lo, hi)


def fit_adaptive(field: GridScalarField, degree: int, tol: float, max_rounds: int = 10,
                 initial_controls=None):
    """Fit, check pointwise error, insert knots, repeat.

    Each round bisects, on every axis, the knot span holding the sample with
    the largest absolute error. The loop stops once the max error is within
    ``tol``, after ``max_rounds`` insertion rounds, or when no axis admits
    another knot.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if initial_controls is None:
        initial_controls = degree + 1
    n0 = np.broadcast_to(np.asarray(initial_controls, dtype=int), (field.dim,))
    kvs = [KnotVector.uniform(int(n), degree) for n in n0]
    model, resid = _solve(field, kvs)
    history = [float(np.sqrt(np.mean(resid ** 2)))]
    rounds = 0
    axes = field.parameter_axes()
    while np.max(np.abs(resid)) > tol and rounds < max_rounds:
        worst = np.unravel_index(np.argmax(np.abs(resid)), resid.shape)
        trial = list(kvs)
        for a in range(field.dim):
            refined, (lo, hi) = _insert_midpoint(trial[a], axes[a][worst[a]])
            mid = 0.5 * (lo + hi)
            ua = axes[a]
            # each half must keep samples, otherwise the basis loses support
            if not (np.any((ua >= lo) & (ua < mid)) and np.any((ua >= mid) & (ua <= hi))):
                continue
            if refined.n_controls > len(ua):
                continue
            try:
                _axis_solver(refined, ua, a)
            except FitError:
                continue
            trial[a] = refined
        if all(t is k for t, k in zip(trial, kvs)):
            break
        kvs = trial
        model, resid = _solve(field, kvs)
        history.append(float(np.sqrt(np.mean(resid ** 2))))
        rounds += 1
    report = FitReport(history[-1], float(np.max(np.abs(resid))), rounds, model.shape, tuple(history))
    return model, report
