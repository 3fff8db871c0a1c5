"""scikit-learn style front ends.

``BSplineGridRegressor`` fits a tensor-product spline to gridded samples and
predicts at arbitrary physical coordinates. ``CriticalPointExtractor`` and
``PLCriticalPointExtractor`` take a fitted model (or regressor) in ``fit``
and expose their results as trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_grid_input, check_model, check_positive
from .extraction import NewtonConfig, extract_all
from .fitting import fit_adaptive, fit_fixed
from .pl import pl_critical_points, sample_grid, upsampled_resolution
from .spline import evaluate


class BSplineGridRegressor(RegressorMixin, BaseEstimator):
    """Least-squares tensor-product B-spline on a uniform grid.

    Parameters
    ----------
    degree : int, default=3
    n_controls : int or tuple of int, optional
        Control points per axis for a fixed fit. Defaults to half the sample
        count per axis (at least ``degree + 1``).
    adaptive : bool, default=False
        Refine knots until the max pointwise error is within ``tol``.
    tol : float, default=1e-3
    max_rounds : int, default=10
    initial_controls : int, optional
        Starting control count per axis for the adaptive loop.

    Attributes
    ----------
    model_ : TensorSplineModel
    fit_report_ : FitReport
    n_features_in_ : int
    """

    def __init__(self, degree=3, n_controls=None, adaptive=False, tol=1e-3, max_rounds=10,
                 initial_controls=None):
        self.degree = degree
        self.n_controls = n_controls
        self.adaptive = adaptive
        self.tol = tol
        self.max_rounds = max_rounds
        self.initial_controls = initial_controls

    def fit(self, X, y=None):
        """Fit to a GridScalarField, or to grid coordinates ``X`` with values ``y``."""
        check_positive("degree", self.degree, integer=True)
        field = check_grid_input(X, y)
        if self.adaptive:
            check_positive("tol", self.tol)
            self.model_, self.fit_report_ = fit_adaptive(
                field, self.degree, self.tol, self.max_rounds, self.initial_controls)
        else:
            n = self.n_controls
            if n is None:
                n = tuple(max(self.degree + 1, m // 2) for m in field.shape)
            self.model_, self.fit_report_ = fit_fixed(field, self.degree, n)
        self.n_features_in_ = field.dim
        return self

    def predict(self, X):
        """Model values at physical coordinates ``X`` of shape ``(n, d)``."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        U = self.model_.to_parameter(X)
        # points on the extent edges can land a rounding error outside [0, 1]
        U = np.where(np.isclose(U, 0.0, atol=1e-12), 0.0, U)
        U = np.where(np.isclose(U, 1.0, rtol=0, atol=1e-12), 1.0, U)
        return evaluate(self.model_, U)


class CriticalPointExtractor(BaseEstimator):
    """Newton-based critical points of a fitted spline model.

    Attributes
    ----------
    critical_points_ : list of CriticalPoint
    locations_ : ndarray of shape (n, d)
        Physical coordinates of the critical points.
    indices_ : ndarray of shape (n,)
        Morse index (negative Hessian eigenvalues) of each point.
    filtration_ : FiltrationResult
    stats_ : ExtractionStats
    """

    def __init__(self, eps=1e-7, max_iter=20, delta=1e-13, xi_factor=5.0, tau=1e-4,
                 init_per_axis=None, n_threads=None):
        self.eps = eps
        self.max_iter = max_iter
        self.delta = delta
        self.xi_factor = xi_factor
        self.tau = tau
        self.init_per_axis = init_per_axis
        self.n_threads = n_threads

    def config(self) -> NewtonConfig:
        return NewtonConfig(self.eps, self.max_iter, self.delta, self.xi_factor, self.tau,
                            self.init_per_axis)

    def fit(self, X, y=None):
        model = check_model(X)
        pts, filt, stats = extract_all(model, self.config(), self.n_threads)
        self.model_ = model
        self.critical_points_ = pts
        self.filtration_ = filt
        self.stats_ = stats
        d = model.dim
        self.locations_ = np.array([p.physical for p in pts], dtype=float).reshape(-1, d)
        self.indices_ = np.array([p.index for p in pts], dtype=int)
        return self


class PLCriticalPointExtractor(BaseEstimator):
    """Critical vertices of the spline sampled on a Freudenthal-triangulated grid.

    Parameters
    ----------
    ratio : float, default=1.0
        Volume upsampling ratio relative to the model's source grid
        (``10**d`` means ten times finer per axis).
    resolution : int or tuple of int, optional
        Explicit vertex counts; overrides ``ratio``.
    include_boundary : bool, default=False
    """

    def __init__(self, ratio=1.0, resolution=None, include_boundary=False):
        self.ratio = ratio
        self.resolution = resolution
        self.include_boundary = include_boundary

    def fit(self, X, y=None):
        model = check_model(X)
        res = self.resolution
        if res is None:
            if model.source_samples is None:
                raise ValueError("model has no source grid; pass resolution explicitly")
            check_positive("ratio", self.ratio)
            res = upsampled_resolution(model.source_samples, self.ratio)
        self.model_ = model
        self.grid_ = sample_grid(model, res)
        self.critical_points_ = pl_critical_points(self.grid_, self.include_boundary)
        d = model.dim
        self.locations_ = np.array([p.physical for p in self.critical_points_], float).reshape(-1, d)
        self.indices_ = np.array([p.index for p in self.critical_points_], dtype=int)
        return self
