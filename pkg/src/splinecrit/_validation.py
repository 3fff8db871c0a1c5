"""Input validation shared by the estimators and the CLI."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted

from .fitting import GridScalarField
from .spline import TensorSplineModel


def check_positive(name, value, integer=False):
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(value, kind) or isinstance(value, bool) or not value > 0:
        raise ValueError(f"{name} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    return value


def grid_from_points(X, y) -> GridScalarField:
    """Rebuild a raster from scattered rows that cover a full uniform grid."""
    X = check_array(X, dtype=float, ensure_2d=True)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    axes = []
    for a in range(X.shape[1]):
        ax = np.unique(X[:, a])
        if ax.size < 2:
            raise ValueError(f"axis {a} has fewer than 2 distinct coordinates")
        step = np.diff(ax)
        if not np.allclose(step, step[0], rtol=1e-6, atol=0):
            raise ValueError(f"axis {a} coordinates are not uniformly spaced")
        axes.append(ax)
    shape = tuple(ax.size for ax in axes)
    if X.shape[0] != int(np.prod(shape)):
        raise ValueError("rows do not form a complete grid")
    values = np.full(shape, np.nan)
    values[tuple(np.searchsorted(axes[a], X[:, a]) for a in range(X.shape[1]))] = y
    if np.isnan(values).any():
        raise ValueError("rows do not form a complete grid (duplicate coordinates)")
    return GridScalarField(values, [(ax[0], ax[-1]) for ax in axes])


def check_grid_input(X, y=None) -> GridScalarField:
    if isinstance(X, GridScalarField):
        return X
    if y is None:
        raise ValueError("pass a GridScalarField, or grid coordinates X with values y")
    return grid_from_points(X, y)


def check_model(obj) -> TensorSplineModel:
    """Accept a model or a fitted estimator exposing ``model_``."""
    if isinstance(obj, TensorSplineModel):
        return obj
    if hasattr(obj, "fit") and hasattr(obj, "get_params"):
        check_is_fitted(obj, "model_")
        return obj.model_
    raise TypeError(f"expected a TensorSplineModel or fitted regressor, got {type(obj).__name__}")
